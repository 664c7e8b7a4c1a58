"""Random test polynomials, a brute-force bound oracle and a multi-start local minimizer.

Generated polynomials have the simplex ``conv{0, d e_1, ..., d e_n}`` as
Newton polytope.  The constant and the pure powers ``z_i^d`` receive integer
coefficients in ``[1, 5]``; the remaining terms sit on componentwise even
exponents of total degree below ``d`` and receive nonzero integers in
``[-5, 5]``.

Sampling uses ``numpy.random.Generator(numpy.random.Philox(seed))``:

1. list the candidate interior exponents in graded lexicographic order;
2. pick ``term_count`` of them with ``rng.choice(..., replace=False)``;
3. draw the ``n + 1`` anchor coefficients with ``rng.integers``;
4. draw the interior coefficients with ``rng.choice`` over the nonzero range.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from sonc.circuits import SupportTooLargeForEnumeration, enumerate_circuits
from sonc.polyrep import Exponent, SparsePolynomial, evaluate, gradient, grlex_key, normalize
from sonc.soncbound import (
    BoundResult,
    NoSoncBound,
    NoSoncBoundEvidence,
    Phase,
    SoncConfig,
    UncoveredExponent,
    _solve,
    assemble_dual,
    extract_certificate,
    initial_circuits,
    verify_certificate,
    CgReport,
)

ORACLE_MAX_SUPPORT = 12


class NotEnoughInteriorMonomials(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    d: int
    term_count: int
    seed: int = 0
    anchor_low: int = 1
    anchor_high: int = 5
    coef_low: int = -5
    coef_high: int = 5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.d < 2 or self.d % 2:
            raise ValueError("d must be even and at least 2")
        if self.term_count < 0:
            raise ValueError("term_count must be nonnegative")
        if not 0 < self.anchor_low <= self.anchor_high:
            raise ValueError("anchor coefficients must be a positive range")
        if not any(v != 0 for v in range(self.coef_low, self.coef_high + 1)):
            raise ValueError("interior coefficient range contains no nonzero integer")


def interior_exponents(n: int, d: int) -> list[Exponent]:
    """Componentwise even exponents of total degree below ``d``, origin excluded, in grlex order."""
    half = (d - 1) // 2
    out = [
        tuple(2 * k for k in ks)
        for ks in itertools.product(range(half + 1), repeat=n)
        if 0 < 2 * sum(ks) < d
    ]
    return sorted(out, key=grlex_key)


def generate(spec: GeneratorSpec) -> SparsePolynomial:
    pool = interior_exponents(spec.n, spec.d)
    if spec.term_count > len(pool):
        raise NotEnoughInteriorMonomials(
            f"requested {spec.term_count} interior terms but only {len(pool)} even exponents of degree < {spec.d} exist for n={spec.n}"
        )
    rng = np.random.Generator(np.random.Philox(spec.seed))
    picks = rng.choice(len(pool), size=spec.term_count, replace=False)
    anchors = rng.integers(spec.anchor_low, spec.anchor_high, size=spec.n + 1, endpoint=True)
    nonzero = np.array([v for v in range(spec.coef_low, spec.coef_high + 1) if v != 0])
    coefs = rng.choice(nonzero, size=spec.term_count)

    terms: dict[Exponent, float] = {(0,) * spec.n: float(anchors[0])}
    for i in range(spec.n):
        e = [0] * spec.n
        e[i] = spec.d
        terms[tuple(e)] = float(anchors[i + 1])
    for k, c in zip(picks, coefs):
        terms[pool[int(k)]] = float(c)
    return normalize(terms, n=spec.n)


# ---------------------------------------------------------------- oracle


def oracle_result(p: SparsePolynomial, cfg: SoncConfig | None = None) -> BoundResult:
    """Solve the bound problem once with every circuit supported on ``supp(p)``."""
    cfg = cfg or SoncConfig()
    if len(p) > ORACLE_MAX_SUPPORT:
        raise SupportTooLargeForEnumeration(f"oracle is limited to supports of size {ORACLE_MAX_SUPPORT}, got {len(p)}")
    evidence = initial_circuits(p)
    if isinstance(evidence, NoSoncBoundEvidence):
        raise NoSoncBound(evidence)
    circuits = enumerate_circuits(p)
    try:
        dual = assemble_dual(p, circuits, Phase.PHASE2)
    except UncoveredExponent as exc:
        raise NoSoncBound(NoSoncBoundEvidence(str(exc))) from None
    sol = _solve(dual, cfg, 1)
    cert = extract_certificate(sol, dual, cfg.verify_tol)
    ver = verify_certificate(p, cert, cfg.verify_tol)
    report = CgReport(initial_circuits=len(circuits))
    report.add(Phase.PHASE2, len(circuits), cert.bound, sol.objective - cert.bound, 0.0)
    report.termination_reason = "oracle"
    return BoundResult(cert.bound, cert, report, ver, circuits, y=sol.y)


def oracle_bound(p: SparsePolynomial, cfg: SoncConfig | None = None) -> float:
    return oracle_result(p, cfg).bound


# ---------------------------------------------------------------- local minimization


class LocalMin(NamedTuple):
    value: float
    argmin: np.ndarray
    all_diverged: bool = False


def local_upper_bound(
    p: SparsePolynomial,
    starts: int = 50,
    seed: int = 0,
    max_iters: int = 3000,
    grad_tol: float = 1e-9,
    box: float = 2.0,
    blowup: float = 1e6,
) -> LocalMin:
    """Smallest value found by gradient descent with Armijo backtracking from random starts.

    Trial steps follow Barzilai-Borwein and are halved until sufficient
    decrease holds.  All starts run in lockstep.  Runs whose iterates leave ``|z| <= blowup``
    or produce non-finite values are discarded.
    """
    if starts < 1:
        raise ValueError("starts must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    Z = rng.uniform(-box, box, size=(starts, p.n))
    fz = evaluate(p, Z)
    step = np.ones(starts)
    prevZ = prevG = None
    active = np.isfinite(fz)
    dead = ~active
    for _ in range(max_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        g = gradient(p, Z[idx])
        gn2 = np.sum(g * g, axis=1)
        done = ~(gn2 > (grad_tol * p.scale) ** 2)
        active[idx[done]] = False
        idx, g, gn2 = idx[~done], g[~done], gn2[~done]
        if idx.size == 0:
            break
        s = np.minimum(step[idx] * 4.0, 1e6)
        if prevZ is not None:
            # Barzilai-Borwein trial step where the last move gives one
            dz, dg = Z[idx] - prevZ[idx], g - prevG[idx]
            num, den = np.sum(dz * dz, axis=1), np.sum(dz * dg, axis=1)
            bb = den > 0
            s[bb] = np.minimum(num[bb] / den[bb], 1e6)
        prevZ = Z.copy() if prevZ is None else prevZ
        prevG = np.zeros_like(Z) if prevG is None else prevG
        prevZ[idx], prevG[idx] = Z[idx], g
        pending = np.ones(idx.size, dtype=bool)
        newZ = Z[idx].copy()
        newf = fz[idx].copy()
        for _ in range(80):
            k = np.flatnonzero(pending)
            if k.size == 0:
                break
            trial = Z[idx[k]] - s[k, None] * g[k]
            with np.errstate(over="ignore", invalid="ignore"):
                ft = evaluate(p, trial)
            ok = np.isfinite(ft) & (ft <= fz[idx[k]] - 1e-4 * s[k] * gn2[k])
            newZ[k[ok]] = trial[ok]
            newf[k[ok]] = ft[ok]
            pending[k[ok]] = False
            s[k[~ok]] *= 0.5
        stalled = fz[idx] - newf <= 1e-15 * (1.0 + np.abs(fz[idx]))
        stuck = pending | stalled
        Z[idx] = newZ
        fz[idx] = newf
        step[idx] = s
        active[idx[stuck]] = False
        blown = ~np.isfinite(fz) | (np.max(np.abs(Z), axis=1) > blowup)
        dead |= blown
        active &= ~blown

    good = np.flatnonzero(~dead & np.isfinite(fz))
    if good.size == 0:
        return LocalMin(math.inf, np.full(p.n, np.nan), True)
    order = sorted(good, key=lambda i: (fz[i], tuple(Z[i])))
    best = order[0]
    return LocalMin(float(fz[best]), Z[best].copy(), False)
