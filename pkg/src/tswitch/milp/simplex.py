"""Dense two-phase primal simplex with bounded variables.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``lb <= x <= ub``. Nonbasic variables sit at either bound, so box constraints
never become rows. Intended for the small relaxations inside the reference
branch-and-bound; large models should go through the HiGHS backend.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import IterationLimit, NumericalFailure

logger = logging.getLogger(__name__)

_PIV_TOL = 1e-9
_OPT_TOL = 1e-9
_FEAS_TOL = 1e-8
_REFACTOR_EVERY = 50
_DEGENERATE_SWITCH = 30


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    fun: float
    nit: int


def _dense(A, n: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, n))
    if hasattr(A, "toarray"):
        A = A.toarray()
    return np.asarray(A, dtype=float).reshape(-1, n)


class _Tableau:
    """Working state of the bounded simplex on ``M z = rhs``, ``lo <= z <= hi``."""

    def __init__(self, M, rhs, lo, hi, basis, z, max_iter):
        self.M = M
        self.rhs = rhs
        self.lo = lo
        self.hi = hi
        self.basis = np.array(basis, dtype=int)
        self.z = z
        self.max_iter = max_iter
        self.nit = 0
        self.refactor()

    def refactor(self) -> None:
        B = self.M[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.M)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"singular basis during refactorization: {exc}")
        nonbasic = np.ones(self.M.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        r = self.rhs - self.M[:, nonbasic] @ self.z[nonbasic]
        self.z[self.basis] = np.linalg.solve(B, r)

    def run(self, cost: np.ndarray) -> str:
        m, N = self.M.shape
        is_basic = np.zeros(N, dtype=bool)
        is_basic[self.basis] = True
        movable = self.hi - self.lo > 0
        scale = max(1.0, float(np.max(np.abs(cost))) if N else 1.0)
        fin_hi = np.isfinite(self.hi)
        hi_tol = np.where(fin_hi, self.hi - _FEAS_TOL * (1 + np.abs(np.where(fin_hi, self.hi, 0))), np.inf)
        degenerate_run = 0
        since_refactor = 0
        while True:
            if self.nit >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} iterations")
            d = cost - cost[self.basis] @ self.T
            at_lower = self.z <= self.lo + _FEAS_TOL * (1 + np.abs(self.lo))
            at_upper = fin_hi & (self.z >= hi_tol)
            tol = _OPT_TOL * scale
            improving = (~is_basic) & movable & (
                ((d < -tol) & ~at_upper) | ((d > tol) & ~at_lower)
            )
            cands = np.flatnonzero(improving)
            if cands.size == 0:
                return "optimal"
            bland = degenerate_run >= _DEGENERATE_SWITCH
            j = int(cands[0]) if bland else int(cands[np.argmax(np.abs(d[cands]))])
            direction = 1.0 if d[j] < 0 else -1.0

            alpha = direction * self.T[:, j]
            xb = self.z[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]
            steps = np.full(m, np.inf)
            dec = alpha > _PIV_TOL
            inc = alpha < -_PIV_TOL
            steps[dec] = (xb[dec] - lob[dec]) / alpha[dec]
            inc_fin = inc & np.isfinite(hib)
            steps[inc_fin] = (hib[inc_fin] - xb[inc_fin]) / (-alpha[inc_fin])
            steps = np.maximum(steps, 0.0)
            flip = self.hi[j] - self.lo[j]
            theta_row = float(steps.min()) if m else np.inf
            if not np.isfinite(theta_row) and not np.isfinite(flip):
                return "unbounded"
            self.nit += 1
            if flip <= theta_row:
                # bound flip, basis unchanged
                self.z[j] += direction * flip
                self.z[self.basis] = xb - flip * alpha
                degenerate_run = 0
                continue
            ties = np.flatnonzero(steps <= theta_row + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            theta = theta_row
            degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0
            self.z[self.basis] = xb - theta * alpha
            self.z[j] += direction * theta
            leaving = int(self.basis[r])
            self.z[leaving] = self.lo[leaving] if alpha[r] > 0 else self.hi[leaving]
            piv = self.T[r, j]
            if abs(piv) < _PIV_TOL:
                raise NumericalFailure("pivot element vanished")
            self.T[r, :] /= piv
            col = self.T[:, j].copy()
            col[r] = 0.0
            self.T -= np.outer(col, self.T[r, :])
            self.basis[r] = j
            is_basic[leaving] = False
            is_basic[j] = True
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0


def linprog_bounded(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    lb=None,
    ub=None,
    max_iter: int = 50_000,
) -> LPResult:
    """Solve a bounded-variable LP with the two-phase primal simplex.

    Returns an :class:`LPResult`; infeasibility and unboundedness are reported
    through ``status``, numerical breakdown raises :class:`NumericalFailure`.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = _dense(A_ub, n)
    A_eq = _dense(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float).copy()
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()
    if np.any(lb > ub + 1e-12):
        return LPResult("infeasible", None, np.inf, 0)

    # map x to nonnegative y: x = shift + sign * y (free vars split in two)
    cols, signs, shifts, y_hi = [], [], np.zeros(n), []
    for j in range(n):
        if np.isfinite(lb[j]):
            cols.append(j); signs.append(1.0); shifts[j] = lb[j]
            y_hi.append(ub[j] - lb[j])
        elif np.isfinite(ub[j]):
            cols.append(j); signs.append(-1.0); shifts[j] = ub[j]
            y_hi.append(np.inf)
        else:
            cols.append(j); signs.append(1.0); y_hi.append(np.inf)
            cols.append(j); signs.append(-1.0); y_hi.append(np.inf)
    cols = np.array(cols, dtype=int)
    signs = np.array(signs)
    ny = cols.size

    def to_y(A: np.ndarray) -> np.ndarray:
        return A[:, cols] * signs

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    Ay = np.vstack([to_y(A_ub), to_y(A_eq)]) if m else np.zeros((0, ny))
    rhs = np.concatenate([b_ub - A_ub @ shifts, b_eq - A_eq @ shifts])
    cy = c[cols] * signs

    # slacks for <= rows; artificials where the slack cannot start basic
    slack = np.zeros((m, m_ub))
    slack[np.arange(m_ub), np.arange(m_ub)] = 1.0
    flip = rhs < 0
    Ay[flip] *= -1
    slack[flip] *= -1
    rhs = np.where(flip, -rhs, rhs)
    need_art = np.ones(m, dtype=bool)
    need_art[:m_ub] = flip[:m_ub]
    art_rows = np.flatnonzero(need_art)
    art = np.zeros((m, art_rows.size))
    art[art_rows, np.arange(art_rows.size)] = 1.0

    M = np.hstack([Ay, slack, art])
    N = M.shape[1]
    lo = np.zeros(N)
    hi = np.concatenate([np.array(y_hi), np.full(m_ub, np.inf), np.full(art_rows.size, np.inf)])
    basis = np.empty(m, dtype=int)
    slack_start = ny
    art_start = ny + m_ub
    basis[~need_art] = slack_start + np.flatnonzero(~need_art[:m_ub])
    basis[art_rows] = art_start + np.arange(art_rows.size)
    z = np.zeros(N)

    tab = _Tableau(M, rhs, lo, hi, basis, z, max_iter)
    if art_rows.size:
        phase1 = np.zeros(N)
        phase1[art_start:] = 1.0
        tab.run(phase1)
        tab.refactor()
        infeas = float(tab.z[art_start:].sum())
        if infeas > _FEAS_TOL * max(1.0, float(np.abs(rhs).max())):
            return LPResult("infeasible", None, np.inf, tab.nit)
        tab.z[art_start:] = np.clip(tab.z[art_start:], 0.0, None)
        tab.hi[art_start:] = 0.0
    cost = np.concatenate([cy, np.zeros(m_ub + art_rows.size)])
    status = tab.run(cost)
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf, tab.nit)
    tab.refactor()
    y = tab.z[:ny]
    x = shifts.copy()
    np.add.at(x, cols, signs * y)
    resid = 0.0
    if m_ub:
        resid = max(resid, float(np.max(A_ub @ x - b_ub, initial=0.0)))
    if m_eq:
        resid = max(resid, float(np.max(np.abs(A_eq @ x - b_eq))))
    if resid > 1e-6 * max(1.0, float(np.abs(rhs).max(initial=0.0))):
        raise NumericalFailure(f"final residual {resid:.3e} exceeds tolerance")
    return LPResult("optimal", x, float(c @ x), tab.nit)
