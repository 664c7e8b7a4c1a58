import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sonc.lp import LpStatus, solve_lp


def test_barycentric_pair():
    res = solve_lp(np.array([[1.0, 1.0], [0.0, 4.0]]), np.array([1.0, 2.0]), np.zeros(2))
    assert res.status is LpStatus.OPTIMAL
    assert np.allclose(res.x, [0.5, 0.5])
    assert res.basis == (0, 1)


def test_fixed_variable():
    res = solve_lp(np.array([[1.0]]), np.array([1.0]), np.array([1.0]))
    assert res.status is LpStatus.OPTIMAL
    assert res.objective == pytest.approx(1.0)


def test_contradictory_equalities():
    res = solve_lp(np.array([[1.0], [1.0]]), np.array([1.0, 2.0]), np.zeros(1))
    assert res.status is LpStatus.INFEASIBLE


def test_unbounded_with_ray():
    A = np.array([[1.0, -1.0]])
    res = solve_lp(A, np.array([0.0]), np.array([-1.0, 0.0]))
    assert res.status is LpStatus.UNBOUNDED
    d = res.ray
    assert np.all(d >= -1e-12) and np.allclose(A @ d, 0) and np.array([-1.0, 0.0]) @ d < 0


def test_redundant_rows():
    A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    res = solve_lp(A, np.array([1.0, 2.0]), np.array([3.0, 1.0, 2.0]))
    assert res.status is LpStatus.OPTIMAL
    assert res.objective == pytest.approx(1.0)


def _brute_force(A, b, c):
    m, k = A.shape
    best = None
    for cols in itertools.combinations(range(k), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-9:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-9):
            val = float(c[list(cols)] @ xb)
            best = val if best is None else min(best, val)
    return best


@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_matches_basis_enumeration(m, extra, seed):
    rng = np.random.default_rng(seed)
    k = m + extra
    A = rng.integers(-3, 4, size=(m, k)).astype(float)
    x0 = rng.integers(0, 3, size=k).astype(float)
    b = A @ x0  # feasible by construction
    c = rng.integers(0, 5, size=k).astype(float)  # c >= 0 keeps it bounded
    res = solve_lp(A, b, c)
    assert res.status is LpStatus.OPTIMAL
    ref = _brute_force(A, b, c)
    if ref is not None:
        assert res.objective == pytest.approx(ref, abs=1e-8)
    assert np.all(res.x >= -1e-12)
    assert np.allclose(A @ res.x, b, atol=1e-8)
    assert np.count_nonzero(np.abs(res.x) > 1e-12) <= np.linalg.matrix_rank(A)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_returns_basic_solution(k, seed):
    # pricing relies on the returned support being affinely independent
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 6, size=(k, 2)).astype(float)
    w = rng.dirichlet(np.ones(k))
    A = np.vstack([pts.T, np.ones(k)])
    b = A @ w
    res = solve_lp(A, b, rng.normal(size=k))
    assert res.status is LpStatus.OPTIMAL
    supp = np.flatnonzero(res.x > 1e-10)
    assert np.linalg.matrix_rank(A[:, supp]) == supp.size


def test_degenerate_cycling_example():
    # Beale's example in standard form: cycles under the textbook largest-coefficient rule
    A = np.array(
        [
            [0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
            [0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )
    b = np.array([0.0, 0.0, 1.0])
    c = np.array([-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0])
    res = solve_lp(A, b, c)
    assert res.status is LpStatus.OPTIMAL
    assert res.objective == pytest.approx(-1.25)
