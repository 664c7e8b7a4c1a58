"""Dense two-phase primal simplex for ``min c^T x  s.t.  A x = b, x >= 0``.

Pivoting follows Bland's rule (lowest-index entering column, ratio-test ties
broken by lowest variable index), so the method terminates on degenerate
problems and is deterministic.  Every optimal answer is a basic feasible
solution, which is what the circuit searches rely on: the positive entries of
a basic solution of a barycentric-coordinate LP index an affinely independent
set of exponents.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

REFACTOR_EVERY = 30
PIVOT_MIN = 1e-11


class LpError(RuntimeError):
    pass


class MaxPivotsExceeded(LpError):
    pass


class NumericalBreakdown(LpError):
    pass


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray
    basis: tuple[int, ...]
    objective: float
    ray: np.ndarray | None = None
    pivots: int = 0


class _Simplex:
    def __init__(self, A, b, basis, max_pivots):
        self.A = A
        self.b = b
        self.m = A.shape[0]
        self.basis = list(basis)
        self.max_pivots = max_pivots
        self.pivots = 0
        self._since_refactor = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            lu, piv = sla.lu_factor(B, check_finite=True)
        except (ValueError, sla.LinAlgError) as exc:
            raise NumericalBreakdown(f"basis factorization failed: {exc}") from None
        if np.min(np.abs(np.diag(lu))) < PIVOT_MIN * max(1.0, np.max(np.abs(lu))):
            raise NumericalBreakdown("basis matrix is numerically singular")
        self.Binv = sla.lu_solve((lu, piv), np.eye(self.m))
        self._since_refactor = 0

    def xb(self):
        return self.Binv @ self.b

    def run(self, cost, allowed, opt_tol):
        """Iterate until optimal or unbounded; returns (status, entering, direction)."""
        A = self.A
        while True:
            xb = self.xb()
            y = cost[self.basis] @ self.Binv
            reduced = cost - y @ A
            in_basis = np.zeros(A.shape[1], dtype=bool)
            in_basis[self.basis] = True
            candidates = np.flatnonzero(allowed & ~in_basis & (reduced < -opt_tol))
            if candidates.size == 0:
                return LpStatus.OPTIMAL, None, None
            j = int(candidates[0])
            u = self.Binv @ A[:, j]
            rows = np.flatnonzero(u > 1e-9)
            if rows.size == 0:
                return LpStatus.UNBOUNDED, j, u
            ratios = np.maximum(xb[rows], 0.0) / u[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j, u)

    def pivot(self, r, j, u):
        if abs(u[r]) < PIVOT_MIN:
            raise NumericalBreakdown(f"pivot element {u[r]:.3e} below {PIVOT_MIN}")
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise MaxPivotsExceeded(f"more than {self.max_pivots} pivots")
        self.basis[r] = j
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()
            return
        # product-form update of the explicit inverse
        row = self.Binv[r] / u[r]
        self.Binv -= np.outer(u, row)
        self.Binv[r] = row


def solve_lp(A, b, c, feas_tol: float = 1e-9) -> LpResult:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.

    Returns an optimal basic feasible solution, or a result with status
    INFEASIBLE (positive phase-one optimum) or UNBOUNDED (``ray`` holds a
    feasible direction of decrease).  ``basis`` lists the basic columns; its
    size is ``rank(A)`` when rows are redundant.
    """
    if feas_tol <= 0:
        raise ValueError("feas_tol must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    m, k = A.shape
    if b.shape != (m,) or c.shape != (k,):
        raise ValueError("inconsistent LP dimensions")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("LP data must be finite")

    sign = np.where(b < 0, -1.0, 1.0)
    A1 = np.hstack([A * sign[:, None], np.eye(m)])
    b1 = b * sign
    max_pivots = 50 * (m + k)
    data_scale = max(1.0, float(np.max(np.abs(b1), initial=0.0)))

    # phase one: drive the artificial columns k..k+m-1 to zero
    cost1 = np.concatenate([np.zeros(k), np.ones(m)])
    allowed = np.ones(k + m, dtype=bool)
    sx = _Simplex(A1, b1, range(k, k + m), max_pivots)
    sx.run(cost1, allowed, 1e-11)
    infeas = float(cost1[sx.basis] @ sx.xb())
    if infeas > feas_tol * data_scale:
        return LpResult(LpStatus.INFEASIBLE, np.zeros(k), (), float("nan"), pivots=sx.pivots)

    # pivot remaining (zero-level) artificials out where possible; rows where
    # that is impossible are redundant and their artificial stays parked at 0
    for r in range(m):
        if sx.basis[r] < k:
            continue
        row = sx.Binv[r] @ A1[:, :k]
        row[[j for j in sx.basis if j < k]] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size:
            j = int(cand[0])
            sx.pivot(r, j, sx.Binv @ A1[:, j])

    allowed[k:] = False
    cost2 = np.concatenate([c, np.zeros(m)])
    opt_tol = 1e-9 * max(1.0, float(np.max(np.abs(c), initial=0.0)))
    status, j, u = sx.run(cost2, allowed, opt_tol)
    if status is LpStatus.OPTIMAL:
        sx.refactor()

    xb = sx.xb()
    x = np.zeros(k + m)
    x[sx.basis] = xb
    x = x[:k]
    x[(x < 0) & (x > -feas_tol * data_scale)] = 0.0
    basis = tuple(sorted(i for i in sx.basis if i < k))

    if status is LpStatus.UNBOUNDED:
        ray = np.zeros(k + m)
        ray[j] = 1.0
        ray[sx.basis] = -u
        return LpResult(LpStatus.UNBOUNDED, x, basis, -np.inf, ray=ray[:k], pivots=sx.pivots)

    if np.max(np.abs(A @ x - b), initial=0.0) > feas_tol * data_scale or np.min(x, initial=0.0) < -feas_tol * data_scale:
        raise NumericalBreakdown("optimal basis fails the feasibility check")
    return LpResult(LpStatus.OPTIMAL, x, basis, float(c @ x), pivots=sx.pivots)
