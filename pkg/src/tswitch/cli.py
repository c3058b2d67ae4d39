"""Command-line front end: ``solve``, ``sensitivity``, ``gen`` and ``validate``.

Exit codes: 0 success, 1 solver failure or broken invariant, 2 usage error,
3 invalid case file, 4 singular topology.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .case_io import CaseFile, generate_case, load_case, serialize_case
from .errors import (
    IntegrityError,
    IterationLimit,
    NumericalFailure,
    SchemaError,
    SingularTopology,
    TSwitchError,
    ValidationError,
)
from .harness import REGIMES, InvariantViolation, check_invariants, run_regime
from .milp.backend import SolveStatus
from .network import Topology, connectivity
from .report import render_table, report_json, write_report
from .sensitivity import sensitivity_set

EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_CASE, EXIT_SINGULAR = 0, 1, 2, 3, 4
TIME_LIMIT_ENV = "TSWITCH_TIME_LIMIT"

logger = logging.getLogger("tswitch")


class UsageError(Exception):
    pass


def _id_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated line ids, got {text!r}")


def _budget(text: str):
    if text.lower() == "none":
        return None
    if "," in text:
        return [int(v) for v in text.split(",")]
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tswitch", description="Multi-hour transmission switching planner")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a case under one regime or all of them")
    s.add_argument("case")
    s.add_argument("--regime", choices=REGIMES + ("compare-all",), default="reduced")
    s.add_argument("--T", type=int, dest="T")
    s.add_argument("--H1", type=_budget, help="per-line budget: int, comma list, or none")
    s.add_argument("--H2", type=_budget, help="per-hour budget: int, comma list, or none")
    s.add_argument("--alpha", type=float)
    s.add_argument("--mip-gap", type=float)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--node-limit", type=int)
    s.add_argument("--overload-threshold", type=float)
    s.add_argument("--backend", choices=("highs", "bnb"))
    s.add_argument("--open-only", action="store_true", help="charge switching cost on openings only")
    s.add_argument("--seed", type=int, default=0, help="recorded in the report")
    s.add_argument("--format", choices=("json", "table"), default="json")
    s.add_argument("--timing", action="store_true", help="include wall times (breaks byte-identity)")
    s.add_argument("--out")

    z = sub.add_parser("sensitivity", help="dump PTDF / LODF for a topology")
    z.add_argument("case")
    z.add_argument("--monitored", type=_id_list, help="line ids (default: all closed lines)")
    z.add_argument("--candidates", type=_id_list, help="line ids (default: all closed lines)")
    z.add_argument("--open", type=_id_list, default=[], help="line ids to open first")
    z.add_argument("--out")

    g = sub.add_parser("gen", help="write a seeded synthetic case")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--buses", type=int, required=True)
    g.add_argument("--lines", type=int, required=True)
    g.add_argument("--T", type=int, dest="T", required=True)
    g.add_argument("--congestion", type=float, default=0.0)
    g.add_argument("--switchable", type=int)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--H1", type=int, default=2)
    g.add_argument("--H2", type=int, default=4)
    g.add_argument("--out")
    g.add_argument("--force", action="store_true", help="overwrite an existing file")

    v = sub.add_parser("validate", help="check that a case file parses")
    v.add_argument("case")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(case: CaseFile, args: argparse.Namespace):
    changes = {}
    for name in ("T", "H1", "H2", "alpha", "mip_gap", "node_limit", "overload_threshold", "backend"):
        v = getattr(args, name)
        if v is not None:
            changes[name] = v
    if args.time_limit is not None:
        changes["time_limit"] = args.time_limit
    elif os.environ.get(TIME_LIMIT_ENV):
        try:
            changes["time_limit"] = float(os.environ[TIME_LIMIT_ENV])
        except ValueError:
            raise UsageError(f"{TIME_LIMIT_ENV} must be a number")
    if args.open_only:
        changes["charge_both_directions"] = False
    cfg = replace(case.config, **changes)
    if cfg.T > case.demand.T:
        raise UsageError(f"--T {cfg.T} exceeds the {case.demand.T} hours in the case")
    try:
        cfg.validate(case.network)
    except ValidationError as exc:
        raise UsageError(str(exc))
    return cfg


def cmd_solve(args: argparse.Namespace) -> int:
    case = load_case(args.case)
    cfg = _config(case, args)
    regimes = REGIMES if args.regime == "compare-all" else (args.regime,)
    results = {}
    for name in regimes:
        logger.info("solving %s", name)
        results[name] = run_regime(case, name, cfg)
    bad = [
        f"{n}: {r.result.status.value}"
        for n, r in results.items()
        if r.result.status not in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE_AT_LIMIT)
    ]
    if bad:
        print("solver failure: " + ", ".join(bad), file=sys.stderr)
        return EXIT_SOLVER
    if args.regime == "compare-all":
        problems = check_invariants(results)
        if problems:
            raise InvariantViolation("; ".join(problems))
    doc = write_report(results.values(), case, seed=args.seed, include_timing=args.timing)
    _emit(render_table(doc) if args.format == "table" else report_json(doc), args.out)
    return EXIT_OK


def sensitivity_report(case: CaseFile, monitored_ids, candidate_ids, open_ids) -> dict:
    net = case.network
    idx = net.line_index
    for lid in list(monitored_ids or []) + list(candidate_ids or []) + list(open_ids):
        if lid not in idx:
            raise UsageError(f"unknown line id {lid}")
    topo = net.initial_topology()
    for lid in open_ids:
        topo = topo.with_status(idx[lid], 0)
    closed_ids = [l.id for k, l in enumerate(net.lines) if topo.closed(k)]
    mon = closed_ids if monitored_ids is None else monitored_ids
    cand = closed_ids if candidate_ids is None else candidate_ids
    for lid in list(mon) + list(cand):
        if not topo.closed(idx[lid]):
            raise UsageError(f"line {lid} is open in this topology")
    comps = connectivity(net, topo)
    if len(comps) > 1:
        raise SingularTopology("closed lines leave the network disconnected", comps)
    sens = sensitivity_set(net, topo, [idx[i] for i in mon], [idx[i] for i in cand])
    ids = [l.id for l in net.lines]
    cand_idx = list(sens.candidates)
    mon_idx = list(sens.monitored)
    doc = {
        "case": case.label,
        "open": list(open_ids),
        "candidates": [
            {
                "line": ids[l],
                "ptdf_self": sens.ptdf_self[l],
                "bridge": sens.is_bridge(l),
            }
            for l in cand_idx
        ],
    }
    if mon_idx:
        doc["monitored"] = [ids[m] for m in mon_idx]
        doc["columns"] = [ids[l] for l in cand_idx]
        # None marks the diagonal and bridge columns, where no LODF exists
        doc["ptdf"] = [[sens.ptdf_cross.get((m, l)) for l in cand_idx] for m in mon_idx]
        doc["lodf"] = [[sens.lodf.get((m, l)) for l in cand_idx] for m in mon_idx]
    return doc


def cmd_sensitivity(args: argparse.Namespace) -> int:
    case = load_case(args.case)
    doc = sensitivity_report(case, args.monitored, args.candidates, args.open)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.buses < 2:
        raise UsageError("--buses must be at least 2")
    if args.lines < args.buses - 1:
        raise UsageError("--lines must be at least --buses - 1 for a connected network")
    if args.T < 1:
        raise UsageError("--T must be at least 1")
    if not 0.0 <= args.congestion <= 1.0:
        raise UsageError("--congestion must lie in [0, 1]")
    if args.out and Path(args.out).exists() and not args.force:
        raise UsageError(f"{args.out} exists; pass --force to overwrite")
    case = generate_case(
        args.seed,
        args.buses,
        args.lines,
        args.T,
        args.congestion,
        alpha=args.alpha,
        H1=args.H1,
        H2=args.H2,
        n_switchable=args.switchable,
    )
    _emit(serialize_case(case), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    case = load_case(args.case)
    net = case.network
    comps = connectivity(net, net.initial_topology())
    print(
        f"ok: {case.label or args.case}: {len(net.buses)} buses, {net.n_lines} lines, "
        f"{len(net.generators)} generators, T={case.T}, {len(net.switchable_lines)} switchable"
    )
    if len(comps) > 1:
        print(f"warning: initial topology has {len(comps)} islands", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sensitivity": cmd_sensitivity,
    "gen": cmd_gen,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (SchemaError, IntegrityError, ValidationError) as exc:
        print(f"invalid case: {exc}", file=sys.stderr)
        return EXIT_CASE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read case: {exc}", file=sys.stderr)
        return EXIT_CASE
    except SingularTopology as exc:
        parts = " | ".join(",".join(str(b) for b in c) for c in exc.components)
        print(f"singular topology: {exc}; components: {parts}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InvariantViolation, IterationLimit, NumericalFailure, TSwitchError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
