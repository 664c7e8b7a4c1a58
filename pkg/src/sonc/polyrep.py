"""Sparse polynomials: support bookkeeping, Newton polytope vertices, evaluation.

Exponents are tuples of nonnegative ints.  A normalized polynomial always
carries the origin in its support (with coefficient 0 if the input had no
constant term) and stores its terms in graded lexicographic order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]

MAX_EXPONENT_ENTRY = 2**31 - 1


class PolynomialError(ValueError):
    pass


class DuplicateExponent(PolynomialError):
    pass


class DimensionMismatch(PolynomialError):
    pass


class NegativeExponentEntry(PolynomialError):
    pass


class ExponentOverflow(PolynomialError):
    pass


def grlex_key(alpha: Sequence[int]) -> tuple:
    return (sum(alpha), tuple(alpha))


def is_even(alpha: Sequence[int]) -> bool:
    return all(a % 2 == 0 for a in alpha)


@dataclass(frozen=True)
class SparsePolynomial:
    """Polynomial given by its support and coefficients in the monomial basis.

    Use :func:`normalize` to construct one; the constructor trusts its input.
    """

    n: int
    exponents: tuple[Exponent, ...]
    coefficients: tuple[float, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.exponents)})

    def __len__(self) -> int:
        return len(self.exponents)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._index

    @property
    def origin(self) -> Exponent:
        return (0,) * self.n

    def index(self, alpha: Sequence[int]) -> int:
        return self._index[tuple(alpha)]

    def coef(self, alpha: Sequence[int]) -> float:
        i = self._index.get(tuple(alpha))
        return 0.0 if i is None else self.coefficients[i]

    @property
    def terms(self) -> dict[Exponent, float]:
        return dict(zip(self.exponents, self.coefficients))

    @cached_property
    def exponent_matrix(self) -> np.ndarray:
        return np.array(self.exponents, dtype=np.int64).reshape(len(self), self.n)

    @cached_property
    def coef_vector(self) -> np.ndarray:
        v = np.array(self.coefficients, dtype=float)
        v.setflags(write=False)
        return v

    @cached_property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.coef_vector))))

    @cached_property
    def even_support(self) -> tuple[Exponent, ...]:
        return classify_support(self)[0]

    @cached_property
    def odd_support(self) -> tuple[Exponent, ...]:
        return classify_support(self)[1]

    @cached_property
    def monomial_squares(self) -> tuple[Exponent, ...]:
        return classify_support(self)[2]

    @cached_property
    def vertices(self) -> tuple[Exponent, ...]:
        return newton_vertices(self)

    def shifted(self, c: float) -> "SparsePolynomial":
        """Return ``self + c`` (shift of the constant term)."""
        coefs = list(self.coefficients)
        coefs[self.index(self.origin)] += c
        return SparsePolynomial(self.n, self.exponents, tuple(coefs))

    def __call__(self, z) -> float:
        return evaluate(self, z)

    def __str__(self):
        parts = []
        for alpha, c in zip(self.exponents, self.coefficients):
            mono = "*".join(f"z{i + 1}^{a}" for i, a in enumerate(alpha) if a)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def normalize(raw_terms: Iterable[tuple[Sequence[int], float]] | Mapping, n: int | None = None) -> SparsePolynomial:
    """Build a normalized :class:`SparsePolynomial`.

    ``raw_terms`` is a mapping or an iterable of ``(exponent, coefficient)``
    pairs.  Terms with coefficient 0 (other than the constant) are dropped; the
    origin is added with coefficient 0 when absent.
    """
    items = list(raw_terms.items()) if isinstance(raw_terms, Mapping) else list(raw_terms)
    if n is None:
        if not items:
            raise DimensionMismatch("cannot infer the dimension of an empty polynomial")
        n = len(items[0][0])
    if n < 1:
        raise DimensionMismatch(f"dimension must be >= 1, got {n}")

    terms: dict[Exponent, float] = {}
    for exp, coef in items:
        alpha = tuple(int(a) for a in exp)
        if len(alpha) != n:
            raise DimensionMismatch(f"exponent {alpha} has length {len(alpha)}, expected {n}")
        if any(a < 0 for a in alpha):
            raise NegativeExponentEntry(f"exponent {alpha} has a negative entry")
        if any(a > MAX_EXPONENT_ENTRY for a in alpha):
            raise ExponentOverflow(f"exponent {alpha} has an entry above 2^31-1")
        if alpha in terms:
            raise DuplicateExponent(f"exponent {alpha} listed twice")
        coef = float(coef)
        if not np.isfinite(coef):
            raise PolynomialError(f"coefficient of {alpha} is not finite")
        terms[alpha] = coef

    origin = (0,) * n
    terms = {a: c for a, c in terms.items() if c != 0.0 or a == origin}
    terms.setdefault(origin, 0.0)
    exps = tuple(sorted(terms, key=grlex_key))
    return SparsePolynomial(n, exps, tuple(terms[a] for a in exps))


def classify_support(p: SparsePolynomial):
    """Split the support into (even, odd, monomial squares), each in grlex order."""
    even = tuple(a for a in p.exponents if is_even(a))
    odd = tuple(a for a in p.exponents if not is_even(a))
    squares = tuple(a for a in even if p.coef(a) > 0)
    return even, odd, squares


def newton_vertices(p: SparsePolynomial) -> tuple[Exponent, ...]:
    """Support points that are extreme points of the convex hull of the support.

    A point is *not* a vertex iff it is a convex combination of the other
    support points, which is decided by one LP feasibility problem per point.
    """
    from sonc.lp import LpStatus, solve_lp

    pts = p.exponent_matrix.astype(float)
    m = len(pts)
    if m == 1:
        return p.exponents
    verts = []
    for i in range(m):
        others = np.delete(pts, i, axis=0)
        A = np.vstack([others.T, np.ones(m - 1)])
        b = np.append(pts[i], 1.0)
        res = solve_lp(A, b, np.zeros(m - 1))
        if res.status is LpStatus.INFEASIBLE:
            verts.append(p.exponents[i])
    return tuple(verts)


def monomials(p: SparsePolynomial, z) -> np.ndarray:
    """Values of all monomials of ``p`` at ``z``; ``z`` may be (n,) or (k, n)."""
    z = np.asarray(z, dtype=float)
    A = p.exponent_matrix
    if z.ndim == 1:
        if z.shape[0] != p.n:
            raise DimensionMismatch(f"point has length {z.shape[0]}, expected {p.n}")
        return np.prod(z[None, :] ** A, axis=1)
    return np.prod(z[:, None, :] ** A[None, :, :], axis=2)


def evaluate(p: SparsePolynomial, z) -> float | np.ndarray:
    """Evaluate ``p`` at one point (n,) or a batch of points (k, n); 0^0 is 1."""
    return monomials(p, z) @ p.coef_vector


def gradient(p: SparsePolynomial, z) -> np.ndarray:
    """Analytic gradient at one point (n,) or a batch (k, n)."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    A = p.exponent_matrix
    powers = Z[:, None, :] ** A[None, :, :]  # (k, m, n)
    out = np.empty_like(Z)
    for i in range(p.n):
        lowered = np.maximum(A[:, i] - 1, 0)
        d = powers.copy()
        d[:, :, i] = A[None, :, i] * Z[:, None, i] ** lowered[None, :]
        out[:, i] = np.prod(d, axis=2) @ p.coef_vector
    return out[0] if single else out


def polynomial_to_json(p: SparsePolynomial) -> dict:
    return {
        "n": p.n,
        "terms": [{"exp": list(a), "coef": c} for a, c in zip(p.exponents, p.coefficients)],
    }


def polynomial_from_json(data: Mapping) -> SparsePolynomial:
    try:
        n = int(data["n"])
        raw = [(t["exp"], t["coef"]) for t in data["terms"]]
    except (KeyError, TypeError) as exc:
        raise PolynomialError(f"malformed polynomial document: {exc}") from None
    return normalize(raw, n=n)


def load_polynomial(path) -> SparsePolynomial:
    with open(path, encoding="utf-8") as fh:
        return polynomial_from_json(json.load(fh))


def dump_polynomial(p: SparsePolynomial) -> str:
    return json.dumps(polynomial_to_json(p), indent=1)
