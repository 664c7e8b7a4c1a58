"""Feasible-start barrier method for ``min c^T y  s.t.  E y = d,  y|_j in K_j``.

Each ``K_j`` is a power cone or a nonnegative ray acting on a slice of ``y``;
slices may overlap, in which case the feasible set is the intersection and
the barrier is the sum of the atom barriers.  Iterates stay strictly feasible
throughout.  At a (near-)central point with path parameter ``t`` the vectors
``s_j = -(grad F_j + H_j dy_j) / t``, with ``dy`` the Newton step, lie in the
dual cones and certify ``c - E^T u = sum_j lift(s_j)``, with duality gap close
to ``nu / t``.

Two path-parameter schedules are available: ``"short"`` multiplies ``t`` by
``1 + 0.2 / sqrt(nu)`` after each centering, ``"long"`` multiplies by a fixed
factor and re-centers with damped Newton steps.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from sonc.cones import ConeAtom, ConeKind, is_interior, membership, power_barrier_batch, power_interior_batch

log = logging.getLogger(__name__)

CENTERED = 0.25
FINAL_CENTERED = 1e-7


class IpmError(RuntimeError):
    pass


class StartNotFeasible(IpmError):
    pass


class NotConverged(IpmError):
    pass


class IpmStatus(enum.Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class _PowerGroup:
    atoms: list[int]
    idx: np.ndarray  # (G, r+1)
    lam: np.ndarray  # (G, r)


class ConicProblem:
    """Linear objective, equality block and a list of (possibly overlapping) cone atoms."""

    def __init__(self, c, atoms: Sequence[ConeAtom], E=None, d=None):
        self.c = np.asarray(c, dtype=float).ravel()
        m = self.c.size
        self.atoms = list(atoms)
        if E is None:
            E = np.zeros((0, m))
            d = np.zeros(0)
        self.E = np.atleast_2d(np.asarray(E, dtype=float)).reshape(-1, m)
        self.d = np.asarray(d, dtype=float).ravel()
        if self.E.shape[0] != self.d.size:
            raise ValueError("equality block has mismatched sizes")
        covered = np.zeros(m, dtype=bool)
        for a in self.atoms:
            if a.kind is ConeKind.DUAL_POWER:
                raise ValueError("the solver takes primal power cones and rays only")
            if max(a.indices) >= m:
                raise ValueError("atom index out of range")
            covered[list(a.indices)] = True
        if not covered.all():
            raise ValueError(f"variables {np.flatnonzero(~covered).tolist()} are not covered by any atom")
        self.nu = float(sum(a.nu for a in self.atoms))

        self.ray_atoms = [j for j, a in enumerate(self.atoms) if a.kind is ConeKind.RAY]
        self.ray_idx = np.array([self.atoms[j].indices[0] for j in self.ray_atoms], dtype=np.int64)
        by_r: dict[int, list[int]] = {}
        for j, a in enumerate(self.atoms):
            if a.kind is ConeKind.POWER:
                by_r.setdefault(len(a.signature), []).append(j)
        self.groups = [
            _PowerGroup(
                js,
                np.array([self.atoms[j].indices for j in js], dtype=np.int64),
                np.array([self.atoms[j].signature for j in js], dtype=float),
            )
            for _, js in sorted(by_r.items())
        ]
        self._null_space()

    @property
    def dim(self) -> int:
        return self.c.size

    def _null_space(self):
        """Sparse null-space basis of E by eliminating one pivot variable per row."""
        m, p = self.dim, self.E.shape[0]
        if p == 0:
            self.Z = np.eye(m)
            return
        _, R, piv = sla.qr(self.E, mode="economic", pivoting=True)
        rank = int(np.sum(np.abs(np.diag(R)) > 1e-12 * max(1.0, abs(R[0, 0]))))
        if rank < p:
            raise ValueError("equality block must have full row rank")
        P = np.sort(piv[:p])
        F = np.setdiff1d(np.arange(m), P)
        Z = np.zeros((m, m - p))
        Z[F, np.arange(m - p)] = 1.0
        Z[P, :] = -np.linalg.solve(self.E[:, P], self.E[:, F])
        Z[np.abs(Z) < 1e-15] = 0.0
        self.Z = Z

    def interior(self, y) -> bool:
        if self.ray_idx.size and np.any(y[self.ray_idx] <= 0):
            return False
        for g in self.groups:
            Y = y[g.idx]
            if not np.all(power_interior_batch(Y[:, :-1], Y[:, -1], g.lam)):
                return False
        return True

    def barrier(self, y):
        """Total barrier value, gradient and Hessian at an interior ``y``."""
        m = self.dim
        val = 0.0
        grad = np.zeros(m)
        H = np.zeros(m * m)
        if self.ray_idx.size:
            v = y[self.ray_idx]
            val -= float(np.sum(np.log(v)))
            np.add.at(grad, self.ray_idx, -1.0 / v)
            H += np.bincount(self.ray_idx * (m + 1), weights=1.0 / v**2, minlength=m * m)
        for g in self.groups:
            Y = y[g.idx]
            vals, grads, hess = power_barrier_batch(Y[:, :-1], Y[:, -1], g.lam)
            val += float(np.sum(vals))
            np.add.at(grad, g.idx, grads)
            flat = (g.idx[:, :, None] * m + g.idx[:, None, :]).ravel()
            H += np.bincount(flat, weights=hess.ravel(), minlength=m * m)
        return val, grad, H.reshape(m, m)

    def atom_gradients(self, y) -> list[np.ndarray]:
        out: list[np.ndarray] = [None] * len(self.atoms)  # type: ignore[list-item]
        for j, v in zip(self.ray_atoms, y[self.ray_idx]):
            out[j] = np.array([-1.0 / v])
        for g in self.groups:
            Y = y[g.idx]
            _, grads, _ = power_barrier_batch(Y[:, :-1], Y[:, -1], g.lam)
            for j, row in zip(g.atoms, grads):
                out[j] = row
        return out


@dataclass
class IpmSolution:
    y: np.ndarray
    status: IpmStatus
    objective: float
    gap: float
    t: float
    decrement: float
    iterations: int
    atom_multipliers: list[np.ndarray] = field(default_factory=list)
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    stationarity: float = math.nan
    history: list[dict] = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is IpmStatus.CONVERGED

    @property
    def mu(self) -> float:
        return 1.0 / self.t


def _newton_direction(Hr, gr):
    """Solve ``Hr dx = -gr`` with Jacobi scaling and a Cholesky factorization."""
    dscale = np.sqrt(np.abs(np.diag(Hr)))
    dscale[dscale == 0] = 1.0
    Hs = Hr / dscale[:, None] / dscale[None, :]
    gs = gr / dscale
    reg = 0.0
    for _ in range(6):
        try:
            cf = sla.cho_factor(Hs + reg * np.eye(len(gs)), check_finite=True)
            dxs = -sla.cho_solve(cf, gs)
            return dxs / dscale
        except (np.linalg.LinAlgError, ValueError):
            reg = 1e-12 if reg == 0.0 else reg * 100
    raise np.linalg.LinAlgError("Newton system is not positive definite")


def solve_conic(
    prob: ConicProblem,
    y0,
    gap_tol: float = 1e-8,
    max_iters: int = 5000,
    step: str = "long",
    long_factor: float = 8.0,
) -> IpmSolution:
    """Minimize ``c^T y`` from the strictly feasible start ``y0``.

    Terminates when ``nu / t <= gap_tol`` at a centered point.
    """
    y = np.array(y0, dtype=float)
    if y.shape != (prob.dim,):
        raise StartNotFeasible("start point has the wrong length")
    if prob.E.shape[0] and np.max(np.abs(prob.E @ y - prob.d)) > 1e-10 * max(1.0, np.max(np.abs(prob.d))):
        raise StartNotFeasible("start point violates the equality constraints")
    if not prob.interior(y):
        raise StartNotFeasible("start point is not strictly inside every cone")
    if step not in ("short", "long"):
        raise ValueError("step must be 'short' or 'long'")

    c, Z, nu = prob.c, prob.Z, prob.nu
    factor = 1.0 + 0.2 / math.sqrt(nu) if step == "short" else long_factor
    y_cap = 1e12 * max(1.0, float(np.max(np.abs(y))))

    _, g, H = prob.barrier(y)
    Hr = Z.T @ H @ Z
    a, b = Z.T @ c, Z.T @ g
    t = 1.0
    try:
        ha = np.linalg.solve(Hr + 1e-14 * np.trace(Hr) * np.eye(len(a)), a) if len(a) else a
        den = float(a @ ha)
        if den > 0:
            t = -float(b @ ha) / den
    except np.linalg.LinAlgError:
        pass
    if not np.isfinite(t) or t <= 0:
        t = 1.0
    t = min(max(t, 1e-6 * nu), 1e6)

    history: list[dict] = []
    status = IpmStatus.ITERATION_LIMIT
    message = ""
    dec = math.inf
    finishing = 0  # polishing steps taken after the gap target is met
    it = 0
    for it in range(1, max_iters + 1):
        _, g, H = prob.barrier(y)
        Hr = Z.T @ H @ Z
        gr = Z.T @ (t * c + g)
        try:
            dx = _newton_direction(Hr, gr)
        except np.linalg.LinAlgError as exc:
            status, message = IpmStatus.NUMERICAL_FAILURE, str(exc)
            break
        dec = math.sqrt(max(float(-gr @ dx), 0.0))
        history.append({"iter": it, "t": t, "decrement": dec, "objective": float(c @ y), "gap": nu / t})

        if finishing:
            finishing += 1
            if dec <= FINAL_CENTERED or finishing > 8:
                status = IpmStatus.CONVERGED
                break
        elif dec <= CENTERED:
            if nu / t <= gap_tol:
                finishing = 1
            else:
                t *= factor
                continue

        alpha = 1.0 if dec < CENTERED else 1.0 / (1.0 + dec)
        dy = Z @ dx
        for _ in range(60):
            cand = y + alpha * dy
            if prob.interior(cand):
                break
            alpha *= 0.5
        else:
            status, message = IpmStatus.NUMERICAL_FAILURE, "no interior step along the Newton direction"
            break
        y = cand
        drift = prob.E @ y - prob.d
        if drift.size and np.max(np.abs(drift)) > 1e-13:
            y = y - np.linalg.lstsq(prob.E, drift, rcond=None)[0]
            if not prob.interior(y):
                status, message = IpmStatus.NUMERICAL_FAILURE, "equality correction left the cone interior"
                break
        if np.max(np.abs(y)) > y_cap:
            status, message = IpmStatus.NUMERICAL_FAILURE, "iterates diverge; the problem appears unbounded"
            break
    else:
        message = f"no convergence within {max_iters} Newton steps"

    sol = IpmSolution(
        y=y,
        status=status,
        objective=float(c @ y),
        gap=nu / t,
        t=t,
        decrement=dec,
        iterations=it,
        history=history,
        message=message,
    )
    if prob.interior(y):
        sol.atom_multipliers, sol.eq_multipliers, sol.stationarity = _multipliers(prob, y, t)
    return sol


def _atom_pieces(prob: ConicProblem, y, dy):
    """Per-atom ``grad F_j + H_j dy_j`` at ``y``."""
    out: list[np.ndarray] = [None] * len(prob.atoms)  # type: ignore[list-item]
    for j, i in zip(prob.ray_atoms, prob.ray_idx):
        v = y[i]
        out[j] = np.array([-1.0 / v + dy[i] / v**2])
    for g in prob.groups:
        Y = y[g.idx]
        _, grads, hess = power_barrier_batch(Y[:, :-1], Y[:, -1], g.lam)
        rows = grads + np.einsum("gij,gj->gi", hess, dy[g.idx])
        for j, row in zip(g.atoms, rows):
            out[j] = row
    return out


def _in_dual(atom: ConeAtom, s) -> bool:
    if atom.kind is ConeKind.RAY:
        return bool(s[0] > 0)
    return is_interior(ConeAtom(ConeKind.DUAL_POWER, atom.indices, atom.signature), s)


def _multipliers(prob: ConicProblem, y, t):
    """Dual estimates ``s_j = -(grad F_j + H_j dy_j) / t`` from the Newton step ``dy`` at ``y``.

    Unlike ``-grad F_j / t`` these satisfy ``c - E^T u = sum_j lift(s_j)``
    exactly, also in coordinates where ``y`` is close to the boundary.  They
    lie in the dual cones whenever the Newton decrement is below one; if not,
    the plain gradient estimate is used.
    """
    _, g, H = prob.barrier(y)
    Z = prob.Z
    try:
        dy = Z @ _newton_direction(Z.T @ H @ Z, Z.T @ (t * prob.c + g))
    except np.linalg.LinAlgError:
        dy = np.zeros(prob.dim)
    s = [-p / t for p in _atom_pieces(prob, y, dy)]
    if not all(_in_dual(a, sj) for a, sj in zip(prob.atoms, s)):
        s = [-gj / t for gj in prob.atom_gradients(y)]
    lifted = np.zeros(prob.dim)
    for a, sj in zip(prob.atoms, s):
        np.add.at(lifted, list(a.indices), sj)
    rhs = prob.c - lifted
    if prob.E.shape[0]:
        u = np.linalg.lstsq(prob.E.T, rhs, rcond=None)[0]
        resid = rhs - prob.E.T @ u
    else:
        u = np.zeros(0)
        resid = rhs
    return s, u, float(np.max(np.abs(resid), initial=0.0))


@dataclass
class Multipliers:
    atoms: list[np.ndarray]
    eq: np.ndarray
    stationarity: float


def extract_multipliers(sol: IpmSolution, prob: ConicProblem, tol: float = 1e-9) -> Multipliers:
    """Dual vectors ``s_j`` (see :func:`_multipliers`) and equality multipliers ``u``.

    Sign convention: ``c - E^T u - sum_j lift(s_j)`` is the reported
    stationarity residual; each ``s_j`` lies in the dual of its atom's cone.
    """
    if not sol.converged:
        raise NotConverged(f"solver status is {sol.status.value}")
    s, u, resid = _multipliers(prob, sol.y, sol.t)
    for a, sj in zip(prob.atoms, s):
        dual = ConeAtom(ConeKind.DUAL_POWER, a.indices, a.signature) if a.kind is ConeKind.POWER else a
        if not membership(dual, sj, tol):
            raise IpmError(f"multiplier {sj} left the dual cone")
    return Multipliers(s, u, resid)


def write_iteration_log(sol: IpmSolution, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["iter", "t", "decrement", "objective", "gap"])
        w.writeheader()
        w.writerows(sol.history)
