"""Case documents: parsing, validation, serialization and synthetic generation.

A case is a single JSON document::

    {
      "format": "tswitch-case", "version": 1,
      "mva_base": 100.0, "T": 2,
      "buses": [{"id": 1, "ref": true, "q": 1000.0, "d": [0.0, 0.0]}, ...],
      "lines": [{"id": 1, "from": 1, "to": 2, "b": 10.0, "fmax": 100.0,
                 "switchable": true, "zeta": 10.0, "delta0": 1}, ...],
      "generators": [{"id": 1, "bus": 1, "Co": [..], "Pmin": [..], "Pmax": [..]}],
      "planning": {"H1": 2, "H2": 4, "alpha": 0.5, ...},
      "duty_curves": {"default": {"points": [[3.15, 1.0], [40.0, 600.0]], "budget": 6000}},
      "switch_history": {"1": [[3.15, 120]]}
    }

Units: MW for demand and flow, p.u. for susceptance ``b`` on ``mva_base``,
$/MWh for ``Co`` and ``q``, $ per operation for ``zeta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import IntegrityError, SchemaError, ValidationError
from .milp.dcopf import dc_opf
from .milp.model import PlanningConfig
from .network import Bus, DemandProfile, Generator, Line, Network
from .wear import DutyCurve

FORMAT = "tswitch-case"
VERSION = 1

_PLANNING_KEYS = {
    "H1", "H2", "alpha", "big_m", "charge_both_directions", "mip_gap",
    "node_limit", "time_limit", "overload_threshold", "backend",
}


@dataclass(frozen=True)
class CaseFile:
    network: Network
    demand: DemandProfile
    config: PlanningConfig
    duty_curves: dict[str, DutyCurve] = field(default_factory=dict)
    switch_history: dict[int, tuple[tuple[float, int], ...]] = field(default_factory=dict)
    label: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.config.T


# -- parsing -----------------------------------------------------------------


def _req(obj: dict, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError("missing field", f"{path}.{key}" if path else key)
    return obj[key]


def _num(v: Any, path: str, *, integer: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"expected a number, got {type(v).__name__}", path)
    if not math.isfinite(v):
        raise SchemaError("non-finite number", path)
    if integer:
        if int(v) != v:
            raise SchemaError("expected an integer", path)
        return int(v)
    return float(v)


def _series(v: Any, T: int, path: str) -> tuple[float, ...]:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v),) * T
    if not isinstance(v, list):
        raise SchemaError("expected a number or a list", path)
    if len(v) != T:
        raise SchemaError(f"expected {T} blocks, got {len(v)}", path)
    return tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(v))


def _bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaError("expected true or false", path)
    return v


def _budget(v: Any, path: str):
    if v is None:
        return None
    if isinstance(v, list):
        return tuple(_num(x, f"{path}[{i}]", integer=True) for i, x in enumerate(v))
    return _num(v, path, integer=True)


def _unique(items: list[dict], what: str) -> None:
    seen: set[int] = set()
    for it in items:
        if it["id"] in seen:
            raise IntegrityError(f"duplicate {what} id {it['id']}")
        seen.add(it["id"])


def case_from_dict(doc: dict) -> CaseFile:
    """Validate and normalize an already-decoded case document."""
    if not isinstance(doc, dict):
        raise SchemaError("case document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise SchemaError(f"expected format {FORMAT!r}", "format")
    if _req(doc, "version", "") != VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}", "version")
    T = _num(_req(doc, "T", ""), "T", integer=True)
    if T < 1:
        raise SchemaError("T must be >= 1", "T")
    mva_base = _num(doc.get("mva_base", 100.0), "mva_base")

    raw_buses = _req(doc, "buses", "")
    if not isinstance(raw_buses, list) or not raw_buses:
        raise SchemaError("expected a non-empty list", "buses")
    buses, d_cols, q = [], [], []
    parsed_buses = []
    for i, b in enumerate(raw_buses):
        p = f"buses[{i}]"
        bid = _num(_req(b, "id", p), f"{p}.id", integer=True)
        ref = _bool(b.get("ref", False), f"{p}.ref")
        parsed_buses.append({"id": bid})
        buses.append(Bus(bid, ref))
        d_cols.append(_series(b.get("d", 0.0), T, f"{p}.d"))
        q.append(_num(b.get("q", 0.0), f"{p}.q"))
    _unique(parsed_buses, "bus")
    if sum(b.is_reference for b in buses) != 1:
        raise IntegrityError("exactly one bus must have ref = true")
    bus_ids = {b.id for b in buses}
    for i, col in enumerate(d_cols):
        if any(v < 0 for v in col):
            raise SchemaError("demand must be non-negative", f"buses[{i}].d")

    raw_gens = doc.get("generators", [])
    if not isinstance(raw_gens, list):
        raise SchemaError("expected a list", "generators")
    gens, parsed_gens = [], []
    for i, g in enumerate(raw_gens):
        p = f"generators[{i}]"
        gid = _num(_req(g, "id", p), f"{p}.id", integer=True)
        bus = _num(_req(g, "bus", p), f"{p}.bus", integer=True)
        if bus not in bus_ids:
            raise IntegrityError(f"{p}: generator {gid} references unknown bus {bus}")
        parsed_gens.append({"id": gid})
        try:
            gens.append(
                Generator(
                    gid,
                    bus,
                    _series(_req(g, "Co", p), T, f"{p}.Co"),
                    _series(g.get("Pmin", 0.0), T, f"{p}.Pmin"),
                    _series(_req(g, "Pmax", p), T, f"{p}.Pmax"),
                )
            )
        except ValidationError as exc:
            raise SchemaError(str(exc), p) from exc
    _unique(parsed_gens, "generator")

    curves: dict[str, DutyCurve] = {}
    raw_curves = doc.get("duty_curves", {})
    if not isinstance(raw_curves, dict):
        raise SchemaError("expected an object", "duty_curves")
    for name, c in raw_curves.items():
        p = f"duty_curves.{name}"
        pts = _req(c, "points", p)
        if not isinstance(pts, list) or not all(isinstance(x, list) and len(x) == 2 for x in pts):
            raise SchemaError("points must be a list of [current_kA, weight] pairs", f"{p}.points")
        try:
            curves[name] = DutyCurve(
                tuple((_num(a, f"{p}.points"), _num(k, f"{p}.points")) for a, k in pts),
                _num(c.get("budget", 6000.0), f"{p}.budget"),
            )
        except ValidationError as exc:
            raise SchemaError(str(exc), p) from exc

    raw_lines = _req(doc, "lines", "")
    if not isinstance(raw_lines, list):
        raise SchemaError("expected a list", "lines")
    lines, parsed_lines = [], []
    for i, l in enumerate(raw_lines):
        p = f"lines[{i}]"
        lid = _num(_req(l, "id", p), f"{p}.id", integer=True)
        fb = _num(_req(l, "from", p), f"{p}.from", integer=True)
        tb = _num(_req(l, "to", p), f"{p}.to", integer=True)
        for end, bid in (("from", fb), ("to", tb)):
            if bid not in bus_ids:
                raise IntegrityError(f"{p}.{end}: line {lid} references unknown bus {bid}")
        curve = l.get("duty_curve")
        if curve is not None and curve not in curves:
            raise IntegrityError(f"{p}.duty_curve: unknown duty curve {curve!r}")
        fmax = _num(_req(l, "fmax", p), f"{p}.fmax")
        fmin = _num(l["fmin"], f"{p}.fmin") if "fmin" in l else -fmax
        delta0 = _num(l.get("delta0", 1), f"{p}.delta0", integer=True)
        parsed_lines.append({"id": lid})
        try:
            lines.append(
                Line(
                    lid, fb, tb,
                    susceptance=_num(_req(l, "b", p), f"{p}.b"),
                    f_max=fmax,
                    f_min=fmin,
                    switchable=_bool(l.get("switchable", True), f"{p}.switchable"),
                    switch_cost=_num(l.get("zeta", 0.0), f"{p}.zeta"),
                    initial_status=delta0,
                    duty_curve=curve,
                )
            )
        except ValidationError as exc:
            raise SchemaError(str(exc), p) from exc
    _unique(parsed_lines, "line")
    line_ids = {l.id for l in lines}

    network = Network(tuple(buses), tuple(lines), tuple(gens), mva_base)
    d = np.array(d_cols, dtype=float).T.reshape(T, len(buses))
    demand = DemandProfile(d, np.array(q))

    plan = doc.get("planning", {}) or {}
    if not isinstance(plan, dict):
        raise SchemaError("expected an object", "planning")
    unknown = set(plan) - _PLANNING_KEYS
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", "planning")
    big_m = plan.get("big_m")
    if big_m is not None:
        if not isinstance(big_m, dict):
            raise SchemaError("expected an object keyed by line id", "planning.big_m")
        big_m = {int(k): _num(v, f"planning.big_m.{k}") for k, v in big_m.items()}
        for k in big_m:
            if k not in line_ids:
                raise IntegrityError(f"planning.big_m references unknown line {k}")
    opt = lambda key, kind: None if plan.get(key) is None else _num(plan[key], f"planning.{key}", integer=kind)  # noqa: E731
    config = PlanningConfig(
        T=T,
        H1=_budget(plan.get("H1"), "planning.H1"),
        H2=_budget(plan.get("H2"), "planning.H2"),
        alpha=_num(plan.get("alpha", 0.5), "planning.alpha"),
        big_m=big_m,
        charge_both_directions=_bool(plan.get("charge_both_directions", True), "planning.charge_both_directions"),
        mip_gap=_num(plan.get("mip_gap", 1e-4), "planning.mip_gap"),
        node_limit=opt("node_limit", True),
        time_limit=opt("time_limit", False),
        overload_threshold=_num(plan.get("overload_threshold", 1.0), "planning.overload_threshold"),
        backend=plan.get("backend", "highs"),
    )
    try:
        config.validate(network)
    except ValidationError as exc:
        raise SchemaError(str(exc), "planning") from exc

    history: dict[int, tuple[tuple[float, int], ...]] = {}
    raw_hist = doc.get("switch_history", {})
    if not isinstance(raw_hist, dict):
        raise SchemaError("expected an object keyed by line id", "switch_history")
    for k, entries in raw_hist.items():
        p = f"switch_history.{k}"
        try:
            lid = int(k)
        except ValueError:
            raise SchemaError("keys must be line ids", p) from None
        if lid not in line_ids:
            raise IntegrityError(f"{p}: unknown line {lid}")
        if not isinstance(entries, list):
            raise SchemaError("expected a list of [current_kA, count] pairs", p)
        history[lid] = tuple(
            (_num(e[0], f"{p}[{j}]"), _num(e[1], f"{p}[{j}]", integer=True)) for j, e in enumerate(entries)
        )

    label = doc.get("label", "")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise SchemaError("expected an object", "meta")
    return CaseFile(network, demand, config, curves, history, str(label), dict(meta))


def parse_case(text: str) -> CaseFile:
    """Parse and validate a case document from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return case_from_dict(doc)


def load_case(path: str | Path) -> CaseFile:
    return parse_case(Path(path).read_text())


# -- serialization -----------------------------------------------------------


def _compact(values: tuple[float, ...]) -> Any:
    return list(values)


def case_to_dict(case: CaseFile) -> dict:
    net, dem, cfg = case.network, case.demand, case.config
    doc: dict[str, Any] = {"format": FORMAT, "version": VERSION}
    if case.label:
        doc["label"] = case.label
    if case.meta:
        doc["meta"] = case.meta
    doc["mva_base"] = net.mva_base
    doc["T"] = cfg.T
    doc["buses"] = [
        {"id": b.id, "ref": b.is_reference, "q": float(dem.q[i]), "d": [float(v) for v in dem.d[:, i]]}
        for i, b in enumerate(net.buses)
    ]
    lines = []
    for l in net.lines:
        row: dict[str, Any] = {
            "id": l.id, "from": l.from_bus, "to": l.to_bus, "b": l.susceptance,
            "fmax": l.f_max, "fmin": l.f_min, "switchable": l.switchable,
            "zeta": l.switch_cost, "delta0": l.initial_status,
        }
        if l.duty_curve is not None:
            row["duty_curve"] = l.duty_curve
        lines.append(row)
    doc["lines"] = lines
    doc["generators"] = [
        {"id": g.id, "bus": g.bus, "Co": _compact(g.cost), "Pmin": _compact(g.p_min), "Pmax": _compact(g.p_max)}
        for g in net.generators
    ]
    planning: dict[str, Any] = {
        "H1": list(cfg.H1) if isinstance(cfg.H1, tuple) else cfg.H1,
        "H2": list(cfg.H2) if isinstance(cfg.H2, tuple) else cfg.H2,
        "alpha": cfg.alpha,
        "charge_both_directions": cfg.charge_both_directions,
        "mip_gap": cfg.mip_gap,
        "overload_threshold": cfg.overload_threshold,
        "backend": cfg.backend,
    }
    if cfg.big_m:
        planning["big_m"] = {str(k): v for k, v in sorted(cfg.big_m.items())}
    if cfg.node_limit is not None:
        planning["node_limit"] = cfg.node_limit
    if cfg.time_limit is not None:
        planning["time_limit"] = cfg.time_limit
    doc["planning"] = planning
    if case.duty_curves:
        doc["duty_curves"] = {
            name: {"points": [list(p) for p in c.points], "budget": c.budget}
            for name, c in sorted(case.duty_curves.items())
        }
    if case.switch_history:
        doc["switch_history"] = {
            str(k): [list(e) for e in v] for k, v in sorted(case.switch_history.items())
        }
    return doc


def serialize_case(case: CaseFile) -> str:
    return json.dumps(case_to_dict(case), indent=2) + "\n"


# -- synthetic generation ----------------------------------------------------


def _daily_shape(T: int, rng: np.random.Generator) -> np.ndarray:
    phase = rng.uniform(0, 2 * math.pi)
    t = np.arange(T)
    return 0.85 + 0.25 * np.sin(phase + 2 * math.pi * t / max(T, 6))


def generate_case(
    seed: int,
    n_buses: int,
    n_lines: int,
    T: int,
    congestion_knob: float = 0.0,
    *,
    alpha: float = 0.5,
    H1: int = 2,
    H2: int = 4,
    n_switchable: int | None = None,
    susceptance_range: tuple[float, float] = (0.5, 2.0),
) -> CaseFile:
    """Seeded synthetic case: spanning tree plus random chords.

    ``congestion_knob`` in [0, 1] is the fraction of lines given a thermal limit
    below their uncongested peak flow; all other lines are rated so that the
    uncongested dispatch loads them to at most 40 %. With the knob at 0 the
    no-switching solve therefore monitors nothing at ``alpha = 0.5``.
    ``n_switchable`` caps the switchable set to a random subset of lines.
    """
    if n_buses < 2:
        raise ValueError("need at least two buses")
    if n_lines < n_buses - 1:
        raise ValueError("n_lines must be at least n_buses - 1 for a connected network")
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 <= congestion_knob <= 1.0:
        raise ValueError("congestion_knob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    bus_ids = list(range(1, n_buses + 1))
    order = rng.permutation(n_buses)
    pairs: list[tuple[int, int]] = []
    for pos in range(1, n_buses):
        a = int(order[pos])
        b = int(order[rng.integers(0, pos)])
        pairs.append((a, b))
    while len(pairs) < n_lines:
        a, b = (int(v) for v in rng.choice(n_buses, size=2, replace=False))
        pairs.append((a, b))
    susceptance = np.round(rng.uniform(*susceptance_range, size=n_lines), 3)
    zeta = np.round(rng.uniform(5.0, 40.0, size=n_lines), 2)

    n_gen = max(2, int(round(1.25 * n_buses)))
    n_wind = n_gen // 5
    gen_bus = rng.integers(0, n_buses, size=n_gen)
    base_cost = np.round(rng.uniform(12.0, 70.0, size=n_gen), 2)
    base_cost[:n_wind] = np.round(rng.uniform(0.5, 3.0, size=n_wind), 2)
    cap = np.round(rng.uniform(60.0, 260.0, size=n_gen), 1)
    # wind units: per-block availability swings hour to hour
    avail = np.ones((T, n_gen))
    avail[:, :n_wind] = rng.uniform(0.1, 1.0, size=(T, n_wind))
    pmax = np.round(cap[None, :] * avail, 1)
    n_load = max(1, int(round(0.7 * n_buses)))
    load_bus = rng.choice(n_buses, size=n_load, replace=False)
    load_base = rng.uniform(40.0, 160.0, size=n_load)
    load_base *= 0.55 * cap.sum() / load_base.sum()
    shape = _daily_shape(T, rng)

    d = np.zeros((T, n_buses))
    for k, b in enumerate(load_bus):
        noise = rng.uniform(0.9, 1.1, size=T)
        d[:, b] = np.round(load_base[k] * shape * noise, 2)
    costs = np.round(base_cost[None, :] * rng.uniform(0.97, 1.03, size=(T, n_gen)), 3)
    q = np.full(n_buses, 1000.0)

    ref = int(order[0])
    buses = [Bus(bus_ids[i], i == ref) for i in range(n_buses)]
    gens = [
        Generator(g + 1, bus_ids[int(gen_bus[g])], costs[:, g], [0.0] * T, pmax[:, g])
        for g in range(n_gen)
    ]
    demand = DemandProfile(d, q)
    loose = [
        Line(k + 1, bus_ids[a], bus_ids[b], float(susceptance[k]), 1e6)
        for k, (a, b) in enumerate(pairs)
    ]
    probe = Network(tuple(buses), tuple(loose), tuple(gens), 100.0)
    peak = np.zeros(n_lines)
    for t in range(T):
        hd = dc_opf(probe, probe.all_closed(), demand, t)
        peak = np.maximum(peak, np.abs(hd.f))

    n_tight = int(round(congestion_knob * n_lines))
    tight = set(int(k) for k in np.argsort(-peak, kind="stable")[:n_tight])
    factors = rng.uniform(0.75, 0.95, size=n_lines)
    fmax = np.empty(n_lines)
    for k in range(n_lines):
        if k in tight:
            fmax[k] = max(np.round(peak[k] * factors[k], 1), 5.0)
        else:
            fmax[k] = max(np.ceil(peak[k] / 0.4), 10.0)
    if n_switchable is None or n_switchable >= n_lines:
        switchable = set(range(n_lines))
    else:
        switchable = set(int(k) for k in rng.choice(n_lines, size=n_switchable, replace=False))
    lines = tuple(
        replace(
            loose[k],
            f_max=float(fmax[k]),
            f_min=-float(fmax[k]),
            switch_cost=float(zeta[k]),
            switchable=k in switchable,
        )
        for k in range(n_lines)
    )
    network = Network(tuple(buses), lines, tuple(gens), 100.0)
    config = PlanningConfig(T=T, H1=H1, H2=H2, alpha=alpha)
    meta = {
        "synthetic": True,
        "generator": "generate_case",
        "seed": int(seed),
        "n_buses": n_buses,
        "n_lines": n_lines,
        "congestion_knob": float(congestion_knob),
        "n_switchable": len(switchable),
    }
    return CaseFile(
        network,
        demand,
        config,
        label=f"synthetic-{n_buses}bus-{n_lines}line-seed{seed}",
        meta=meta,
    )
