"""Reference best-first branch-and-bound over binary columns.

Nodes are ordered by (parent LP bound, creation index), so the search is fully
deterministic. Relaxations are solved by :func:`linprog_bounded`. Branching
picks the most fractional binary; ties go to the smallest ``branch_keys``
entry (line id first). Among incumbents of equal objective the
lexicographically smallest binary vector wins.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time

import numpy as np

from ..errors import IterationLimit
from .backend import BackendResult, SolverOptions, SolveStatus, StandardForm, relative_gap
from .simplex import linprog_bounded

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
_TIE_RTOL = 1e-9


class _Search:
    def __init__(self, form: StandardForm, options: SolverOptions):
        self.form = form
        self.options = options
        self.ints = form.integer_columns
        self.A_ub = form.A_ub.toarray()
        self.A_eq = form.A_eq.toarray()
        self.best_x: np.ndarray | None = None
        self.best_obj = np.inf
        self.lp_solves = 0

    def relax(self, lb: np.ndarray, ub: np.ndarray):
        self.lp_solves += 1
        f = self.form
        return linprog_bounded(f.c, self.A_ub, f.b_ub, self.A_eq, f.b_eq, lb, ub)

    def offer(self, x: np.ndarray, obj: float) -> None:
        """Accept an integral point if it beats (or ties lexicographically below) the incumbent."""
        if self.best_x is None or obj < self.best_obj - _TIE_RTOL * max(1.0, abs(obj)):
            self.best_x, self.best_obj = x, obj
            return
        if abs(obj - self.best_obj) <= _TIE_RTOL * max(1.0, abs(obj)):
            cur = tuple(np.round(self.best_x[self.ints]).astype(int))
            new = tuple(np.round(x[self.ints]).astype(int))
            if new < cur:
                self.best_x, self.best_obj = x, min(obj, self.best_obj)

    def try_assignment(self, values: dict[int, float]) -> None:
        lb, ub = self.form.lb.copy(), self.form.ub.copy()
        for j, v in values.items():
            if v < lb[j] or v > ub[j]:
                return
            lb[j] = ub[j] = v
        res = self.relax(lb, ub)
        if res.status == "optimal":
            self.offer(res.x, res.fun)

    def branch_column(self, x: np.ndarray) -> int | None:
        vals = x[self.ints]
        frac = np.minimum(vals - np.floor(vals), np.ceil(vals) - vals)
        frac_cols = [
            (-float(f), self.form.branch_keys.get(int(j), (int(j),)), int(j))
            for j, f in zip(self.ints, frac)
            if f > INT_TOL
        ]
        if not frac_cols:
            return None
        # most fractional first, then smallest key; fractionality compared to 1e-9
        top = min(f for f, _, _ in frac_cols)
        near = [c for c in frac_cols if c[0] <= top + 1e-9]
        return min(near, key=lambda c: c[1])[2]


def branch_and_bound(
    form: StandardForm,
    options: SolverOptions,
    warm_start: dict[int, float] | None = None,
) -> BackendResult:
    start = time.perf_counter()
    search = _Search(form, options)
    if warm_start:
        search.try_assignment(warm_start)

    counter = itertools.count()
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (-np.inf, next(counter), form.lb.copy(), form.ub.copy()))
    nodes = 0
    unbounded = False
    hit_limit = False

    def cutoff() -> float:
        if search.best_x is None:
            return np.inf
        return search.best_obj - options.mip_gap * max(abs(search.best_obj + form.offset), 1e-10)

    while heap:
        bound, _, lb, ub = heap[0]
        if search.best_x is not None and bound >= cutoff():
            break
        if options.node_limit is not None and nodes >= options.node_limit:
            hit_limit = True
            break
        if options.time_limit is not None and time.perf_counter() - start > options.time_limit:
            hit_limit = True
            break
        heapq.heappop(heap)
        nodes += 1
        res = search.relax(lb, ub)
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            unbounded = True
            break
        if res.fun >= cutoff():
            continue
        j = search.branch_column(res.x)
        if j is None:
            x = res.x.copy()
            x[search.ints] = np.round(x[search.ints])
            search.offer(x, res.fun)
            continue
        for v in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            if v == 0.0:
                cub[j] = np.floor(res.x[j])
            else:
                clb[j] = np.ceil(res.x[j])
            heapq.heappush(heap, (res.fun, next(counter), clb, cub))

    elapsed = time.perf_counter() - start
    logger.debug("bnb: %d nodes, %d LP solves, %.3fs", nodes, search.lp_solves, elapsed)
    if unbounded:
        return BackendResult(SolveStatus.UNBOUNDED, None, -np.inf, -np.inf, np.inf, nodes, elapsed)
    if search.best_x is None:
        if hit_limit:
            raise IterationLimit(f"no incumbent after {nodes} nodes")
        return BackendResult(SolveStatus.INFEASIBLE, None, np.inf, np.inf, np.inf, nodes, elapsed)
    obj = search.best_obj + form.offset
    open_bound = min((h[0] for h in heap), default=np.inf)
    bound = min(open_bound, search.best_obj) + form.offset
    gap = relative_gap(obj, bound)
    status = SolveStatus.FEASIBLE_AT_LIMIT if hit_limit and gap > options.mip_gap else SolveStatus.OPTIMAL
    return BackendResult(status, search.best_x, obj, bound, gap, nodes, elapsed)
