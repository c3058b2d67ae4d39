"""Experiment regimes: no switching, classic, constrained and reduced switching.

``classic`` frees every switchable line with no per-line or per-hour budget
and no switching cost, i.e. plain optimal transmission switching.
``constrained`` adds the switching costs and both budgets. ``reduced`` runs
the candidate-reduction pipeline with the same budgets.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .case_io import CaseFile, generate_case
from .milp.backend import SolveStatus
from .milp.dcopf import dc_opf
from .milp.model import PlanningConfig, SolveResult, SwitchingPlan, build_model, solve
from .network import Network
from .reduction import plan_switching

logger = logging.getLogger(__name__)

REGIMES = ("baseline", "classic", "constrained", "reduced")

# congested 13-bus / 34-line / 5-hour synthetic family shipped in tswitch/data
FAMILY_SEEDS = (0, 1, 2, 3)
FAMILY_DIMS = (13, 34, 5)
FAMILY_CONGESTION = 0.1
FAMILY_TIME_LIMIT = 60.0


class InvariantViolation(AssertionError):
    """A compare-all run broke the objective-ordering or budget invariants."""


@dataclass
class RegimeResult:
    regime: str
    result: SolveResult
    config: PlanningConfig
    network: Network
    mll_sizes: list[int] | None = None
    sll_sizes: list[int] | None = None
    sll_original: int | None = None
    timings: dict[str, float] = field(default_factory=dict)


def family_case(seed: int) -> CaseFile:
    """Regenerate one member of the bundled 13-bus-scale fixture family."""
    nb, nl, T = FAMILY_DIMS
    case = generate_case(seed, nb, nl, T, FAMILY_CONGESTION)
    return replace(case, config=replace(case.config, time_limit=FAMILY_TIME_LIMIT))


def family_name(seed: int) -> str:
    return f"family13_seed{seed}"


def _free_switching(network: Network) -> Network:
    return Network(
        network.buses,
        tuple(replace(l, switch_cost=0.0) for l in network.lines),
        network.generators,
        network.mva_base,
    )


def run_baseline(case: CaseFile, config: PlanningConfig) -> RegimeResult:
    net, dem = case.network, case.demand
    start = time.perf_counter()
    init = net.initial_topology()
    dispatch = [dc_opf(net, init, dem, t) for t in range(config.T)]
    wall = time.perf_counter() - start
    total = float(sum(h.objective for h in dispatch))
    res = SolveResult(
        SolveStatus.OPTIMAL, total, SwitchingPlan.identity(net, config.T), dispatch, 0.0, wall, total
    )
    return RegimeResult("baseline", res, config, net, timings={"solve": wall})


def run_regime(case: CaseFile, regime: str, config: PlanningConfig | None = None) -> RegimeResult:
    """Solve ``case`` under one regime; ``config`` defaults to the case's planning block."""
    config = config or case.config
    net, dem = case.network, case.demand
    if regime == "baseline":
        return run_baseline(case, config)
    if regime == "classic":
        cfg = config.without_budgets()
        free_net = _free_switching(net)
        res = solve(build_model(free_net, dem, cfg))
        return RegimeResult("classic", res, cfg, free_net, timings={"solve": res.wall_time})
    if regime == "constrained":
        res = solve(build_model(net, dem, config))
        return RegimeResult("constrained", res, config, net, timings={"solve": res.wall_time})
    if regime == "reduced":
        out = plan_switching(net, dem, config)
        return RegimeResult(
            "reduced",
            out.result,
            config,
            net,
            mll_sizes=out.monitored.sizes(),
            sll_sizes=out.candidates.sizes(),
            sll_original=len(out.candidates.original),
            timings=dict(out.timings),
        )
    raise ValueError(f"unknown regime {regime!r}")


def _tol(*results: RegimeResult) -> float:
    gaps = [r.result.gap for r in results if np.isfinite(r.result.gap)]
    gap = max([r.config.mip_gap for r in results] + gaps)
    scale = max(abs(r.result.objective) for r in results)
    return gap * scale + 1e-6


def check_invariants(results: dict[str, RegimeResult]) -> list[str]:
    """Return human-readable violations of ordering and budget invariants."""
    problems = []

    def order(hi: str, lo: str) -> None:
        if hi in results and lo in results:
            a, b = results[hi], results[lo]
            if a.result.objective < b.result.objective - _tol(a, b):
                problems.append(
                    f"Z_{hi} = {a.result.objective:.6f} < Z_{lo} = {b.result.objective:.6f}"
                )

    order("baseline", "constrained")
    order("constrained", "classic")
    order("reduced", "constrained")
    order("baseline", "reduced")
    for name, r in results.items():
        if r.result.plan is not None:
            bad = r.result.plan.budget_violations(r.config)
            if bad:
                problems.append(f"{name}: {bad} budget rows violated")
    return problems


def compare_all(case: CaseFile, config: PlanningConfig | None = None) -> dict[str, RegimeResult]:
    results = {name: run_regime(case, name, config) for name in REGIMES}
    problems = check_invariants(results)
    if problems:
        raise InvariantViolation("; ".join(problems))
    return results
