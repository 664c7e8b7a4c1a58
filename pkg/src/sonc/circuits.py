"""Circuits, their signatures, and the nonnegativity test for circuit polynomials."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sonc.polyrep import Exponent, SparsePolynomial, grlex_key, is_even

RESIDUAL_TOL = 1e-9
LAMBDA_MIN = 1e-10
MAX_ENUMERATION_SUPPORT = 14


class CircuitError(ValueError):
    pass


class NotAffinelyIndependent(CircuitError):
    pass


class InnerNotInteriorPoint(CircuitError):
    pass


class OddOuterExponent(CircuitError):
    pass


class SupportTooLargeForEnumeration(CircuitError):
    pass


@dataclass(frozen=True)
class Circuit:
    """Outer exponents (grlex order), inner exponent and barycentric signature."""

    outer: tuple[Exponent, ...]
    inner: Exponent
    signature: tuple[float, ...]

    @property
    def r(self) -> int:
        return len(self.outer)

    @property
    def key(self) -> tuple:
        return (self.outer, self.inner)

    @property
    def support(self) -> tuple[Exponent, ...]:
        return self.outer + (self.inner,)

    def to_json(self) -> dict:
        return {"outer": [list(a) for a in self.outer], "inner": list(self.inner), "lambda": list(self.signature)}

    def __str__(self):
        lam = ", ".join(f"{x:.4g}" for x in self.signature)
        return f"Circuit(outer={list(self.outer)}, inner={self.inner}, lambda=({lam}))"


@dataclass(frozen=True)
class CircuitPolyCoeffs:
    outer: tuple[float, ...]
    inner: float


def make_circuit(outer: Sequence[Sequence[int]], inner: Sequence[int]) -> Circuit:
    """Validate a candidate circuit and compute its signature.

    Raises OddOuterExponent, NotAffinelyIndependent or InnerNotInteriorPoint.
    """
    outer_t = sorted({tuple(int(x) for x in a) for a in outer}, key=grlex_key)
    if len(outer_t) != len(outer):
        raise NotAffinelyIndependent("repeated outer exponent")
    beta = tuple(int(x) for x in inner)
    if not outer_t:
        raise InnerNotInteriorPoint("no outer exponents")
    n = len(beta)
    if any(len(a) != n for a in outer_t):
        raise CircuitError("outer and inner exponents differ in dimension")
    for a in outer_t:
        if not is_even(a):
            raise OddOuterExponent(f"outer exponent {a} is not componentwise even")
    if beta in outer_t:
        raise InnerNotInteriorPoint(f"inner exponent {beta} coincides with an outer exponent")

    M = np.vstack([np.array(outer_t, dtype=float).T, np.ones(len(outer_t))])
    rhs = np.append(np.array(beta, dtype=float), 1.0)
    if np.linalg.matrix_rank(M) < len(outer_t):
        raise NotAffinelyIndependent(f"outer exponents {outer_t} are affinely dependent")
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.max(np.abs(M @ lam - rhs)) > RESIDUAL_TOL:
        raise InnerNotInteriorPoint(f"{beta} is not in the affine hull of the outer exponents")
    if np.min(lam) <= LAMBDA_MIN:
        raise InnerNotInteriorPoint(f"{beta} is not a strictly positive convex combination")
    if len(outer_t) < 2:
        raise InnerNotInteriorPoint("a circuit needs at least two outer exponents")
    return Circuit(tuple(outer_t), beta, tuple(float(x) for x in lam))


def log_power_mean(values, weights) -> float:
    """``sum_i w_i log(v_i)`` with -inf for zero entries."""
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.dot(weights, np.log(values)))


def nonnegativity_margin(c: Circuit, coeffs: CircuitPolyCoeffs) -> tuple[float, bool]:
    """Margin ``prod (f_i / lambda_i)^lambda_i - |f_beta|`` and the nonnegativity verdict.

    The circuit polynomial is nonnegative iff all outer coefficients are
    positive and either the margin is nonnegative or the inner exponent is even
    with a nonnegative coefficient.  With a nonpositive outer coefficient the
    margin is ``-inf``.
    """
    outer = np.asarray(coeffs.outer, dtype=float)
    if outer.shape != (c.r,):
        raise ValueError("coefficient vector does not match the circuit")
    if np.any(outer <= 0):
        return -math.inf, False
    lam = np.asarray(c.signature)
    bound = math.exp(float(np.dot(lam, np.log(outer / lam))))
    margin = bound - abs(coeffs.inner)
    nonneg = margin >= 0 or (is_even(c.inner) and coeffs.inner >= 0)
    return margin, nonneg


def evaluate_circuit_polynomial(c: Circuit, coeffs: CircuitPolyCoeffs, z) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    A = np.array(c.outer, dtype=np.int64)
    vals = np.prod(z[:, None, :] ** A[None, :, :], axis=2) @ np.asarray(coeffs.outer)
    return vals + coeffs.inner * np.prod(z ** np.array(c.inner), axis=1)


def enumerate_circuits(p: SparsePolynomial, inner_only: Sequence[int] | None = None) -> list[Circuit]:
    """Every circuit supported on ``supp(p)`` with componentwise even outer exponents.

    Brute force over subsets, so only for small supports (at most 14 points).
    """
    if len(p) > MAX_ENUMERATION_SUPPORT:
        raise SupportTooLargeForEnumeration(
            f"support has {len(p)} points, enumeration is limited to {MAX_ENUMERATION_SUPPORT}"
        )
    if inner_only is not None:
        inners = [tuple(inner_only)]
    else:
        inners = list(p.exponents)
    even = p.even_support
    found: dict[tuple, Circuit] = {}
    for beta in inners:
        pool = [a for a in even if a != beta]
        for size in range(2, min(p.n + 1, len(pool)) + 1):
            for subset in itertools.combinations(pool, size):
                try:
                    circ = make_circuit(subset, beta)
                except CircuitError:
                    continue
                found.setdefault(circ.key, circ)
    return sorted(found.values(), key=lambda c: (grlex_key(c.inner), [grlex_key(a) for a in c.outer]))
