"""Power cones, their duals and nonnegative rays.

The power cone with signature ``lam`` (positive, summing to one) is
``{(v, z) : v >= 0, |z| <= prod v_i^lam_i}``; its dual replaces ``v_i`` by
``v_i / lam_i`` in the product.  For the power cone we use the logarithmically
homogeneous barrier

    F(v, z) = -log(prod v_i^(2 lam_i) - z^2) - sum (1 - lam_i) log v_i

with parameter ``r + 1``.  The nonnegative ray has barrier ``-log v`` with
parameter 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TINY = 1e-300


class ConeKind(enum.Enum):
    POWER = "power"
    DUAL_POWER = "dual_power"
    RAY = "ray"


class PointNotInterior(ValueError):
    pass


@dataclass(frozen=True)
class ConeAtom:
    """A cone constraint on ``host[indices]``; for power kinds the last index is the z-slot."""

    kind: ConeKind
    indices: tuple[int, ...]
    signature: tuple[float, ...] = ()

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("cone atom indices must be distinct")
        if self.kind is ConeKind.RAY:
            if len(self.indices) != 1 or self.signature:
                raise ValueError("a ray atom has one index and no signature")
        else:
            lam = np.asarray(self.signature)
            if len(lam) + 1 != len(self.indices):
                raise ValueError("power atom needs r + 1 indices for a signature of length r")
            if np.any(lam <= 0) or np.any(lam >= 1) or abs(lam.sum() - 1) > 1e-12:
                raise ValueError("signature entries must lie in (0, 1) and sum to 1")

    @property
    def nu(self) -> float:
        return 1.0 if self.kind is ConeKind.RAY else float(len(self.indices))


@dataclass
class BarrierEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    nu: float


def ray(index: int) -> ConeAtom:
    return ConeAtom(ConeKind.RAY, (index,))


def power(indices: Sequence[int], signature: Sequence[float]) -> ConeAtom:
    lam = np.asarray(signature, dtype=float)
    lam = lam / lam.sum()
    return ConeAtom(ConeKind.POWER, tuple(int(i) for i in indices), tuple(float(x) for x in lam))


def _log_prod(v: np.ndarray, lam: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.dot(lam, np.log(np.where(v < TINY, 0.0, v))))


def membership(atom: ConeAtom, point, tol: float = 0.0) -> bool:
    """Is ``point`` (the subvector selected by ``atom.indices``) in the cone, up to ``tol``?"""
    x = np.asarray(point, dtype=float)
    if atom.kind is ConeKind.RAY:
        return bool(x[0] >= -tol)
    v, z = x[:-1], x[-1]
    if np.any(v < -tol):
        return False
    lam = np.asarray(atom.signature)
    v = np.maximum(v, 0.0)
    if atom.kind is ConeKind.DUAL_POWER:
        v = v / lam
    return bool(abs(z) <= math.exp(_log_prod(v, lam)) + tol)


def is_interior(atom: ConeAtom, point) -> bool:
    x = np.asarray(point, dtype=float)
    if atom.kind is ConeKind.RAY:
        return bool(x[0] > 0)
    v, z = x[:-1], x[-1]
    if np.any(v <= 0):
        return False
    lam = np.asarray(atom.signature)
    if atom.kind is ConeKind.DUAL_POWER:
        v = v / lam
    if z == 0:
        return True
    return bool(math.log(abs(z)) < _log_prod(v, lam))


def barrier(atom: ConeAtom, point) -> BarrierEval:
    """Value, gradient and Hessian of the atom's barrier at an interior point."""
    x = np.asarray(point, dtype=float)
    if not is_interior(atom, x):
        raise PointNotInterior(f"{x} is not interior to the {atom.kind.value} cone")
    if atom.kind is ConeKind.RAY:
        v = x[0]
        return BarrierEval(-math.log(v), np.array([-1.0 / v]), np.array([[1.0 / v**2]]), 1.0)
    if atom.kind is ConeKind.DUAL_POWER:
        raise NotImplementedError("dual power cone barrier is not provided")
    lam = np.asarray(atom.signature)
    vals, grads, hess = power_barrier_batch(x[None, :-1], x[None, -1], lam[None, :])
    return BarrierEval(float(vals[0]), grads[0], hess[0], atom.nu)


def power_barrier_batch(V: np.ndarray, Z: np.ndarray, L: np.ndarray):
    """Power cone barrier for G atoms sharing the size r.

    ``V`` is (G, r), ``Z`` is (G,), ``L`` is (G, r).  Returns values (G,),
    gradients (G, r+1) and Hessians (G, r+1, r+1), z-slot last.
    """
    logv = np.log(V)
    logphi = 2.0 * np.sum(L * logv, axis=1)
    phi = np.exp(logphi)
    # psi = phi - z^2, written to keep relative accuracy near the boundary
    with np.errstate(divide="ignore"):
        ratio = np.exp(2.0 * np.log(np.abs(Z)) - logphi)
    psi = phi * (1.0 - ratio)
    a = 1.0 / (1.0 - ratio)  # phi / psi
    b = Z / psi
    w = 2.0 * L / V
    vals = -np.log(psi) - np.sum((1.0 - L) * logv, axis=1)

    G, r = V.shape
    grads = np.empty((G, r + 1))
    grads[:, :r] = -(a[:, None] * w + (1.0 - L) / V)
    grads[:, r] = 2.0 * b

    hess = np.empty((G, r + 1, r + 1))
    hess[:, :r, :r] = (a * a - a)[:, None, None] * w[:, :, None] * w[:, None, :]
    diag = (2.0 * L * a[:, None] + 1.0 - L) / V**2
    idx = np.arange(r)
    hess[:, idx, idx] += diag
    hess[:, :r, r] = -2.0 * (a * b)[:, None] * w
    hess[:, r, :r] = hess[:, :r, r]
    hess[:, r, r] = 2.0 / psi + 4.0 * b * b
    return vals, grads, hess


def power_interior_batch(V: np.ndarray, Z: np.ndarray, L: np.ndarray) -> np.ndarray:
    ok = np.all(V > 0, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = np.log(np.abs(Z))
        rhs = np.sum(L * np.log(np.where(V > 0, V, 1.0)), axis=1)
    return ok & (lhs < rhs)


class SlaterMode(enum.Enum):
    PHASE1 = "phase1"
    PHASE2 = "phase2"


def default_theta(exponents: Sequence[Sequence[int]]) -> float:
    sq = max((float(np.dot(a, a)) for a in exponents), default=0.0)
    return 1.0 / sq if sq > 0 else 1.0


def slater_weights(exponents: Sequence[Sequence[int]]) -> np.ndarray:
    """``q(alpha) = (max|alpha|_inf + 1) |alpha|_1 - |alpha|^2``.

    ``q`` is strictly concave, vanishes at the origin and is at least
    ``|alpha|_1`` on the given exponents.
    """
    E = np.asarray(exponents, dtype=float)
    kappa = float(np.max(E, initial=0.0)) + 1.0
    return kappa * E.sum(axis=1) - np.sum(E * E, axis=1)


def slater_point(exponents: Sequence[Sequence[int]], mode: SlaterMode = SlaterMode.PHASE2, theta: float | None = None) -> np.ndarray:
    """``y_alpha = exp(-theta * q(alpha))`` for the concave weight of :func:`slater_weights`.

    Strict concavity of ``q`` gives ``q(beta) > sum lam_i q(alpha_i)`` on every
    circuit, so all power cone constraints hold strictly.  Phase two yields
    ``y_0 = 1`` and ``y_alpha < 1`` elsewhere; phase one adds 1 to ``q`` so
    that ``y < 1`` everywhere.
    """
    if theta is None:
        theta = default_theta(exponents)
    if theta <= 0:
        raise ValueError("theta must be positive")
    q = slater_weights(exponents)
    if mode is SlaterMode.PHASE1:
        q = q + 1.0
    return np.exp(-theta * q)
