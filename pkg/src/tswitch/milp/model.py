"""Multi-hour DC-OPF with line switching as a mixed-integer program.

Per hour ``t`` the model carries generator outputs ``p``, line flows ``f``,
bus angles ``theta``, curtailment ``r``, line statuses ``delta`` (binary) and
switch events ``s`` (continuous in [0, 1]). Switch events are linearized as
``s >= |delta^t - delta^{t-1}|`` with ``delta^0`` taken from each line's
initial status.

Row counts per hour: ``n_buses`` balance equalities plus ``6 * n_lines``
inequalities (two big-M, two flow-gating, two switch-event rows). Budgets add
``n_lines`` per-line rows and ``T`` per-hour rows when enabled.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidCandidate, ValidationError
from ..network import DemandProfile, Network, Topology
from .backend import BackendResult, SolverOptions, SolveStatus, StandardForm, solve_milp

KINDS = ("p", "f", "theta", "r", "delta", "s")
FEAS_TOL = 1e-6


@dataclass(frozen=True)
class PlanningConfig:
    """Planning horizon, switching budgets and solver settings.

    ``H1`` (per-line budget over the horizon) and ``H2`` (system-wide budget per
    hour) accept a scalar, a per-line / per-hour sequence, or ``None`` to drop
    the constraint entirely. ``overload_threshold`` scales ``f_max`` in the
    candidate screening test.
    """

    T: int = 1
    H1: int | Sequence[int] | None = None
    H2: int | Sequence[int] | None = None
    alpha: float = 0.5
    big_m: Mapping[int, float] | None = None
    charge_both_directions: bool = True
    mip_gap: float = 1e-4
    node_limit: int | None = None
    time_limit: float | None = None
    overload_threshold: float = 1.0
    backend: str = "highs"

    def validate(self, network: Network | None = None) -> None:
        """Check the documented invariants; raise :class:`ValidationError` on failure."""
        if self.T < 1:
            raise ValidationError("T must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("alpha must lie in (0, 1]")
        for name in ("H1", "H2"):
            v = getattr(self, name)
            if v is None:
                continue
            vals = [v] if np.isscalar(v) else list(v)
            if any(int(x) != x or x < 0 for x in vals):
                raise ValidationError(f"{name} entries must be non-negative integers")
        if network is not None and self.H1 is not None and not np.isscalar(self.H1):
            if len(self.H1) != network.n_lines:
                raise ValidationError("H1 must have one entry per line")
        if self.H2 is not None and not np.isscalar(self.H2) and len(self.H2) != self.T:
            raise ValidationError("H2 must have one entry per hour")
        if self.mip_gap < 0:
            raise ValidationError("mip_gap must be non-negative")
        if self.backend not in ("highs", "bnb"):
            raise ValidationError(f"unknown backend {self.backend!r}")

    def h1_array(self, n_lines: int) -> np.ndarray | None:
        if self.H1 is None:
            return None
        return np.broadcast_to(np.asarray(self.H1, dtype=float), (n_lines,)).copy()

    def h2_array(self) -> np.ndarray | None:
        if self.H2 is None:
            return None
        return np.broadcast_to(np.asarray(self.H2, dtype=float), (self.T,)).copy()

    def big_m_array(self, network: Network) -> np.ndarray:
        M = network.b_mw * math.pi
        if self.big_m:
            for line_id, value in self.big_m.items():
                M[network.line_index[line_id]] = float(value)
        return M

    def solver_options(self) -> SolverOptions:
        return SolverOptions(self.mip_gap, self.time_limit, self.node_limit)

    def without_budgets(self) -> "PlanningConfig":
        from dataclasses import replace

        return replace(self, H1=None, H2=None)


@dataclass(frozen=True)
class SwitchingPlan:
    """Line statuses ``delta[t, l]`` for hours ``1..T`` plus the initial status row."""

    delta: np.ndarray
    initial: tuple[int, ...]

    def __post_init__(self) -> None:
        d = np.asarray(self.delta, dtype=int)
        d.flags.writeable = False
        object.__setattr__(self, "delta", d)

    @property
    def T(self) -> int:
        return int(self.delta.shape[0])

    @property
    def events(self) -> np.ndarray:
        """``s[t, l] = |delta^t - delta^{t-1}|``."""
        full = np.vstack([np.asarray(self.initial, dtype=int)[None, :], self.delta])
        return np.abs(np.diff(full, axis=0))

    @property
    def openings(self) -> np.ndarray:
        full = np.vstack([np.asarray(self.initial, dtype=int)[None, :], self.delta])
        return (np.diff(full, axis=0) < 0).astype(int)

    @property
    def total_switches(self) -> int:
        return int(self.events.sum())

    def per_line(self) -> np.ndarray:
        return self.events.sum(axis=0)

    def per_hour(self) -> np.ndarray:
        return self.events.sum(axis=1)

    def topology(self, t: int) -> Topology:
        """Topology in hour ``t`` (0-based)."""
        return Topology(tuple(int(v) for v in self.delta[t]))

    def budget_violations(self, config: PlanningConfig) -> int:
        """Count violated per-line and per-hour budget rows."""
        bad = 0
        h1 = config.h1_array(self.delta.shape[1])
        h2 = config.h2_array()
        if h1 is not None:
            bad += int(np.sum(self.per_line() > h1))
        if h2 is not None:
            bad += int(np.sum(self.per_hour() > h2[: self.T]))
        return bad

    @classmethod
    def identity(cls, network: Network, T: int) -> "SwitchingPlan":
        init = network.initial_topology().status
        return cls(np.tile(np.asarray(init, dtype=int), (T, 1)), init)


@dataclass
class HourDispatch:
    p: np.ndarray
    f: np.ndarray
    theta: np.ndarray
    r: np.ndarray
    generation_cost: float
    curtailment_cost: float
    switching_cost: float = 0.0

    @property
    def objective(self) -> float:
        return self.generation_cost + self.curtailment_cost + self.switching_cost


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float
    plan: SwitchingPlan | None
    dispatch: list[HourDispatch]
    gap: float
    wall_time: float
    bound: float = float("nan")
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE_AT_LIMIT)


@dataclass
class MilpModel:
    """Standard-form model plus the maps from columns back to network entities."""

    network: Network
    demand: DemandProfile
    config: PlanningConfig
    form: StandardForm
    offsets: dict[str, int]
    per_hour: int
    free: list[frozenset[int]]
    row_counts: dict[str, int] = field(default_factory=dict)

    def col(self, kind: str, t: int, k: int) -> int:
        return t * self.per_hour + self.offsets[kind] + k

    def cols(self, kind: str, t: int) -> np.ndarray:
        n = self._size(kind)
        return t * self.per_hour + self.offsets[kind] + np.arange(n)

    def _size(self, kind: str) -> int:
        net = self.network
        return {
            "p": len(net.generators),
            "f": net.n_lines,
            "theta": net.n_buses,
            "r": net.n_buses,
            "delta": net.n_lines,
            "s": net.n_lines,
        }[kind]

    @property
    def n_binaries(self) -> int:
        return int(self.form.integrality.sum())

    @property
    def is_lp(self) -> bool:
        """True when every status variable is fixed by its bounds."""
        d = np.concatenate([self.cols("delta", t) for t in range(self.config.T)])
        return bool(np.all(self.form.lb[d] == self.form.ub[d]))

    def warm_start(self) -> dict[int, float]:
        init = self.network.initial_topology().status
        return {
            self.col("delta", t, l): float(init[l])
            for t in range(self.config.T)
            for l in range(self.network.n_lines)
            if self.form.integrality[self.col("delta", t, l)]
        }


def _normalize_free(
    network: Network, T: int, free_candidates
) -> list[frozenset[int]]:
    switchable = set(network.switchable_lines)
    if free_candidates is None:
        free = [frozenset(switchable)] * T
    elif (
        isinstance(free_candidates, (set, frozenset))
        or len(free_candidates) == 0
        or np.isscalar(next(iter(free_candidates)))
    ):
        free = [frozenset(free_candidates)] * T
    else:
        free = [frozenset(fc) for fc in free_candidates]
        if len(free) != T:
            raise ValidationError(f"free_candidates has {len(free)} hours, expected {T}")
    for t, fc in enumerate(free):
        bad = sorted(fc - switchable)
        if bad:
            ids = [network.lines[k].id for k in bad if 0 <= k < network.n_lines]
            raise InvalidCandidate(f"hour {t + 1}: non-switchable lines offered as candidates: {ids}")
    return free


def build_model(
    network: Network,
    demand: DemandProfile,
    config: PlanningConfig,
    free_candidates=None,
) -> MilpModel:
    """Assemble the switching MILP.

    Parameters
    ----------
    free_candidates
        Line indices whose status may change. ``None`` frees every switchable
        line in every hour; a flat collection applies to all hours; a list of
        ``T`` collections gives per-hour sets. Lines not free in hour ``t`` are
        pinned to their initial status.
    """
    T = config.T
    if demand.T < T:
        raise ValidationError(f"demand has {demand.T} blocks, horizon needs {T}")
    for g in network.generators:
        if len(g.cost) < T:
            raise ValidationError(f"generator {g.id} has fewer than {T} blocks")
    free = _normalize_free(network, T, free_candidates)

    nb, nl, ng = network.n_buses, network.n_lines, len(network.generators)
    offsets = {}
    pos = 0
    for kind, size in zip(KINDS, (ng, nl, nb, nb, nl, nl)):
        offsets[kind] = pos
        pos += size
    per_hour = pos
    n = per_hour * T

    def col(kind: str, t: int, k: int) -> int:
        return t * per_hour + offsets[kind] + k

    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.zeros(n)
    integrality = np.zeros(n, dtype=bool)
    names: list[str] = [""] * n
    branch_keys: dict[int, tuple] = {}
    offset = 0.0

    A = network.full_incidence
    b = network.b_mw
    M = config.big_m_array(network)
    init = np.asarray(network.initial_topology().status, dtype=float)
    zeta = np.array([l.switch_cost for l in network.lines])
    half = 1.0 if config.charge_both_directions else 0.5

    eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []
    ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []
    counts = dict.fromkeys(("balance", "big_m", "flow_gate", "switch_event", "line_budget", "hour_budget"), 0)

    def add_ub(entries: list[tuple[int, float]], rhs: float, kind: str) -> None:
        r = len(b_ub)
        for j, v in entries:
            ub_rows.append(r); ub_cols.append(j); ub_vals.append(v)
        b_ub.append(rhs)
        counts[kind] += 1

    for t in range(T):
        h = t + 1
        for gi, g in enumerate(network.generators):
            j = col("p", t, gi)
            c[j] = g.cost[t]
            lb[j], ub[j] = g.p_min[t], g.p_max[t]
            names[j] = f"p_{h}_{g.id}"
        for k, line in enumerate(network.lines):
            j = col("f", t, k)
            lb[j], ub[j] = min(line.f_min, 0.0), max(line.f_max, 0.0)
            names[j] = f"f_{h}_{line.id}"
        for i, bus in enumerate(network.buses):
            j = col("theta", t, i)
            if i == network.ref_index:
                lb[j] = ub[j] = 0.0
            else:
                lb[j], ub[j] = -math.pi / 2, math.pi / 2
            names[j] = f"theta_{h}_{bus.id}"
            j = col("r", t, i)
            c[j] = demand.q[i]
            lb[j], ub[j] = 0.0, demand.d[t, i]
            names[j] = f"r_{h}_{bus.id}"
        for k, line in enumerate(network.lines):
            j = col("delta", t, k)
            names[j] = f"delta_{h}_{line.id}"
            if k in free[t]:
                lb[j], ub[j] = 0.0, 1.0
                integrality[j] = True
                branch_keys[j] = (line.id, h)
            else:
                lb[j] = ub[j] = init[k]
            js = col("s", t, k)
            names[js] = f"s_{h}_{line.id}"
            lb[js], ub[js] = 0.0, 1.0
            c[js] = zeta[k] * half
            if not config.charge_both_directions:
                # open-only charge: zeta/2 * (s + delta^{t-1} - delta^t)
                c[j] -= zeta[k] * 0.5
                if t == 0:
                    offset += zeta[k] * 0.5 * init[k]
                else:
                    c[col("delta", t - 1, k)] += zeta[k] * 0.5

        # nodal balance: sum p + r - A f = d
        for i in range(nb):
            r = len(b_eq)
            for gi in np.flatnonzero(network.gen_bus_idx == i):
                eq_rows.append(r); eq_cols.append(col("p", t, int(gi))); eq_vals.append(1.0)
            eq_rows.append(r); eq_cols.append(col("r", t, i)); eq_vals.append(1.0)
            for k in np.flatnonzero(A[i]):
                eq_rows.append(r); eq_cols.append(col("f", t, int(k))); eq_vals.append(-A[i, k])
            b_eq.append(demand.d[t, i])
            counts["balance"] += 1

        for k, line in enumerate(network.lines):
            fi, ti = int(network.from_idx[k]), int(network.to_idx[k])
            jf, jd, js = col("f", t, k), col("delta", t, k), col("s", t, k)
            jth_f, jth_t = col("theta", t, fi), col("theta", t, ti)
            # -M(1 - delta) <= f - b dtheta <= M(1 - delta)
            add_ub([(jf, -1.0), (jth_f, b[k]), (jth_t, -b[k]), (jd, M[k])], M[k], "big_m")
            add_ub([(jf, 1.0), (jth_f, -b[k]), (jth_t, b[k]), (jd, M[k])], M[k], "big_m")
            # delta f_min <= f <= delta f_max
            add_ub([(jf, -1.0), (jd, line.f_min)], 0.0, "flow_gate")
            add_ub([(jf, 1.0), (jd, -line.f_max)], 0.0, "flow_gate")
            # s >= +-(delta^t - delta^{t-1})
            if t == 0:
                add_ub([(jd, 1.0), (js, -1.0)], init[k], "switch_event")
                add_ub([(jd, -1.0), (js, -1.0)], -init[k], "switch_event")
            else:
                jp = col("delta", t - 1, k)
                add_ub([(jd, 1.0), (jp, -1.0), (js, -1.0)], 0.0, "switch_event")
                add_ub([(jd, -1.0), (jp, 1.0), (js, -1.0)], 0.0, "switch_event")

    h1 = config.h1_array(nl)
    if h1 is not None:
        for k in range(nl):
            add_ub([(col("s", t, k), 1.0) for t in range(T)], h1[k], "line_budget")
    h2 = config.h2_array()
    if h2 is not None:
        for t in range(T):
            add_ub([(col("s", t, k), 1.0) for k in range(nl)], h2[t], "hour_budget")

    A_eq = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n))
    A_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n))
    form = StandardForm(
        c=c,
        A_ub=A_ub,
        b_ub=np.asarray(b_ub, dtype=float),
        A_eq=A_eq,
        b_eq=np.asarray(b_eq, dtype=float),
        lb=lb,
        ub=ub,
        integrality=integrality,
        offset=offset,
        names=names,
        branch_keys=branch_keys,
    )
    return MilpModel(network, demand, config, form, offsets, per_hour, free, counts)


def _extract(model: MilpModel, x: np.ndarray) -> tuple[SwitchingPlan, list[HourDispatch]]:
    net, T = model.network, model.config.T
    init = net.initial_topology().status
    delta = np.vstack([np.round(x[model.cols("delta", t)]).astype(int) for t in range(T)])
    plan = SwitchingPlan(delta, init)
    zeta = np.array([l.switch_cost for l in net.lines])
    events = plan.openings if not model.config.charge_both_directions else plan.events
    dispatch = []
    for t in range(T):
        p = x[model.cols("p", t)]
        r = x[model.cols("r", t)]
        cost = np.array([g.cost[t] for g in net.generators])
        dispatch.append(
            HourDispatch(
                p=p,
                f=x[model.cols("f", t)],
                theta=x[model.cols("theta", t)],
                r=r,
                generation_cost=float(cost @ p) if cost.size else 0.0,
                curtailment_cost=float(model.demand.q @ r),
                switching_cost=float(zeta @ events[t]),
            )
        )
    return plan, dispatch


def solve(model: MilpModel, config: PlanningConfig | None = None) -> SolveResult:
    """Solve ``model`` with the backend named in ``config`` (defaults to the model's)."""
    config = config or model.config
    start = time.perf_counter()
    warm = model.warm_start() if config.backend == "bnb" else None
    res: BackendResult = solve_milp(model.form, config.solver_options(), config.backend, warm)
    wall = time.perf_counter() - start
    if res.x is None:
        return SolveResult(res.status, res.objective, None, [], res.gap, wall, res.bound, res.nodes)
    plan, dispatch = _extract(model, res.x)
    return SolveResult(res.status, res.objective, plan, dispatch, res.gap, wall, res.bound, res.nodes)


def residuals(model: MilpModel, x: np.ndarray) -> float:
    """Largest constraint or bound violation of ``x`` in the model."""
    f = model.form
    worst = 0.0
    if f.A_ub.shape[0]:
        worst = max(worst, float(np.max(f.A_ub @ x - f.b_ub, initial=0.0)))
    if f.A_eq.shape[0]:
        worst = max(worst, float(np.max(np.abs(f.A_eq @ x - f.b_eq))))
    worst = max(worst, float(np.max(f.lb - x, initial=0.0)), float(np.max(x - f.ub, initial=0.0)))
    return worst


def assemble_x(model: MilpModel, result: SolveResult) -> np.ndarray:
    """Rebuild the full column vector from a :class:`SolveResult`."""
    x = np.zeros(model.form.n_vars)
    for t, hd in enumerate(result.dispatch):
        x[model.cols("p", t)] = hd.p
        x[model.cols("f", t)] = hd.f
        x[model.cols("theta", t)] = hd.theta
        x[model.cols("r", t)] = hd.r
        x[model.cols("delta", t)] = result.plan.delta[t]
    ev = result.plan.events
    for t in range(model.config.T):
        x[model.cols("s", t)] = ev[t]
    return x


def _num12(v: float) -> str:
    return np.format_float_positional(float(v), precision=12, unique=False, fractional=False, trim="-")


def _terms(cols: np.ndarray, vals: np.ndarray, names: Sequence[str]) -> str:
    parts = []
    for j, v in zip(cols, vals):
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_num12(abs(v))} {names[j]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: MilpModel) -> str:
    """Export the model in CPLEX LP text format for cross-checking with other solvers.

    Coefficients are written as fixed-point decimals with 12 significant
    digits. The constant objective offset, if any, appears as a comment.
    """
    f = model.form
    names = list(f.names)
    out = ["\\ tswitch switching model"]
    if f.offset:
        out.append(f"\\ objective offset {_num12(f.offset)}")
    nz = np.flatnonzero(f.c)
    out += ["Minimize", f" obj: {_terms(nz, f.c[nz], names) or '0 ' + names[0]}", "Subject To"]
    for prefix, A, rhs, sense in (("e", f.A_eq, f.b_eq, "="), ("u", f.A_ub, f.b_ub, "<=")):
        A = A.tocsr()
        for r in range(A.shape[0]):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            out.append(f" {prefix}{r + 1}: {_terms(A.indices[lo:hi], A.data[lo:hi], names)} {sense} {_num12(rhs[r])}")
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = f.lb[j], f.ub[j]
        if lo == hi:
            out.append(f" {name} = {_num12(lo)}")
        else:
            lo_s = "-inf" if np.isneginf(lo) else _num12(lo)
            hi_s = "+inf" if np.isposinf(hi) else _num12(hi)
            out.append(f" {lo_s} <= {name} <= {hi_s}")
    ints = [names[j] for j in np.flatnonzero(f.integrality)]
    if ints:
        out.append("Binary")
        out += [f" {n}" for n in ints]
    out.append("End")
    return "\n".join(out) + "\n"
