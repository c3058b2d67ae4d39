"""Solver backend contract and the HiGHS-backed implementation.

A backend receives a :class:`StandardForm` and returns a :class:`BackendResult`
carrying the best incumbent, a dual bound and a status. Two backends ship:

``"bnb"``
    the reference best-first branch-and-bound over the bounded simplex
    (:mod:`tswitch.milp.bnb`);
``"highs"``
    ``scipy.optimize.milp``, for instances beyond desk-toy size.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from ..errors import NumericalFailure


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_AT_LIMIT = "FeasibleAtLimit"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class StandardForm:
    """``min c @ x + offset`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``.

    ``integrality`` marks binary/integer columns. ``branch_keys`` gives a sort
    key per integer column for breaking branching ties.
    """

    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    offset: float = 0.0
    names: Sequence[str] = ()
    branch_keys: dict[int, tuple] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return int(self.c.size)

    @property
    def integer_columns(self) -> np.ndarray:
        return np.flatnonzero(self.integrality)


@dataclass
class SolverOptions:
    mip_gap: float = 1e-4
    time_limit: float | None = None
    node_limit: int | None = None


@dataclass
class BackendResult:
    status: SolveStatus
    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int = 0
    wall_time: float = 0.0


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return np.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-10)


def _solve_highs(form: StandardForm, options: SolverOptions) -> BackendResult:
    start = time.perf_counter()
    constraints = []
    if form.A_ub.shape[0]:
        constraints.append(LinearConstraint(form.A_ub, -np.inf, form.b_ub))
    if form.A_eq.shape[0]:
        constraints.append(LinearConstraint(form.A_eq, form.b_eq, form.b_eq))
    opts: dict = {"disp": False, "mip_rel_gap": options.mip_gap}
    if options.time_limit is not None:
        opts["time_limit"] = float(options.time_limit)
    if options.node_limit is not None:
        opts["node_limit"] = int(options.node_limit)
    res = milp(
        form.c,
        integrality=form.integrality.astype(int),
        bounds=Bounds(form.lb, form.ub),
        constraints=constraints,
        options=opts,
    )
    elapsed = time.perf_counter() - start
    if res.status == 2:
        return BackendResult(SolveStatus.INFEASIBLE, None, np.inf, np.inf, np.inf, 0, elapsed)
    if res.status == 3:
        return BackendResult(SolveStatus.UNBOUNDED, None, -np.inf, -np.inf, np.inf, 0, elapsed)
    if res.x is None:
        raise NumericalFailure(f"HiGHS returned no solution: {res.message}")
    x = np.asarray(res.x, dtype=float)
    ints = form.integer_columns
    x[ints] = np.round(x[ints])
    obj = float(form.c @ x) + form.offset
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else float(bound) + form.offset
    gap = relative_gap(obj, bound)
    status = SolveStatus.OPTIMAL if res.status == 0 else SolveStatus.FEASIBLE_AT_LIMIT
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    return BackendResult(status, x, obj, min(bound, obj), gap, nodes, elapsed)


def solve_milp(
    form: StandardForm,
    options: SolverOptions | None = None,
    backend: str = "highs",
    warm_start: dict[int, float] | None = None,
) -> BackendResult:
    """Dispatch a standard-form model to the named backend."""
    options = options or SolverOptions()
    if backend == "highs":
        return _solve_highs(form, options)
    if backend == "bnb":
        from .bnb import branch_and_bound

        return branch_and_bound(form, options, warm_start=warm_start)
    raise ValueError(f"unknown backend {backend!r}")
