import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sonc.circuits import (
    CircuitPolyCoeffs,
    InnerNotInteriorPoint,
    NotAffinelyIndependent,
    OddOuterExponent,
    SupportTooLargeForEnumeration,
    enumerate_circuits,
    evaluate_circuit_polynomial,
    make_circuit,
    nonnegativity_margin,
)
from sonc.polyrep import normalize


def test_signatures(c1, c2):
    assert np.allclose(c1.signature, [0.5, 0.25, 0.25])
    assert np.allclose(c2.signature, [2 / 3, 1 / 3])


@pytest.mark.parametrize(
    "outer, inner, err",
    [
        ([(0, 0), (4, 0)], (4, 0), InnerNotInteriorPoint),
        ([(0, 0), (4, 0)], (6, 0), InnerNotInteriorPoint),
        ([(0, 0), (4, 0)], (2, 2), InnerNotInteriorPoint),
        ([(0, 0), (3, 0)], (1, 0), OddOuterExponent),
        ([(0, 0), (2, 0), (4, 0)], (1, 0), NotAffinelyIndependent),
    ],
)
def test_make_circuit_errors(outer, inner, err):
    with pytest.raises(err):
        make_circuit(outer, inner)


def test_outer_order_canonical():
    a = make_circuit([(6, 2), (0, 2)], (2, 2))
    assert a.outer == ((0, 2), (6, 2))


def test_margin_examples(c1, c2):
    m, ok = nonnegativity_margin(c1, CircuitPolyCoeffs((1 / 8, 1.0, 1.0), -1.0))
    assert ok and m == pytest.approx(0.0, abs=1e-12)
    m, ok = nonnegativity_margin(c2, CircuitPolyCoeffs((1.0, 1.0), -1.0))
    assert ok and m == pytest.approx((27 / 4) ** (1 / 3) - 1)
    m, ok = nonnegativity_margin(c2, CircuitPolyCoeffs((1.0, 1.0), 5.0))
    assert ok and m < 0
    m, ok = nonnegativity_margin(c2, CircuitPolyCoeffs((0.0, 1.0), -1.0))
    assert not ok and m == -math.inf


def test_odd_inner_sign_does_not_help():
    c = make_circuit([(0,), (2,)], (1,))
    assert not nonnegativity_margin(c, CircuitPolyCoeffs((1.0, 1.0), 3.0))[1]
    assert nonnegativity_margin(c, CircuitPolyCoeffs((1.0, 1.0), 2.0))[1]


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-6, 6))
def test_margin_matches_sampled_minimum(a, b, z):
    # z1^0, z1^6 with inner z1^2 in one variable; the sign verdict agrees with a grid search
    c = make_circuit([(0,), (6,)], (2,))
    coeffs = CircuitPolyCoeffs((a, b), z)
    margin, ok = nonnegativity_margin(c, coeffs)
    xs = np.linspace(-3, 3, 6001)
    vals = evaluate_circuit_polynomial(c, coeffs, xs[:, None])
    assert ok == (vals.min() >= -1e-9) or abs(margin) < 1e-2
    if margin > 1e-6 * max(1, abs(z)):
        assert vals.min() >= -1e-9
    if margin < -1e-2 and z < 0:
        assert vals.min() < 0


def test_spiky_support_counts():
    for n in (2, 3, 4):
        pts = {(0,) * n: 1.0, (1,) * n: -1.0}
        for i in range(n):
            for k in (2 * n, 4 * n):
                e = [0] * n
                e[i] = k
                pts[tuple(e)] = 1.0
        p = normalize(pts)
        assert len(enumerate_circuits(p, inner_only=(1,) * n)) == 2**n


def test_enumerate_small():
    p = normalize({(0,): 1, (2,): 1, (4,): 1})
    out = enumerate_circuits(p)
    assert len(out) == 1
    assert out[0].outer == ((0,), (4,)) and out[0].inner == (2,)
    assert np.allclose(out[0].signature, [0.5, 0.5])
    assert enumerate_circuits(normalize({(0,): 1, (4,): 1})) == []


def test_enumerate_limit():
    p = normalize({(k,): 1.0 for k in range(15)})
    with pytest.raises(SupportTooLargeForEnumeration):
        enumerate_circuits(p)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_signature_round_trip(seed, r):
    # weights k_i / D and outer exponents in 2D * Z^n keep the inner exponent integral
    rng = np.random.default_rng(seed)
    n = r - 1 + int(rng.integers(0, 2))
    D = 12
    while True:
        base = rng.integers(0, 4, size=(r, n))
        if len({tuple(a) for a in base}) == r and np.linalg.matrix_rank(np.vstack([base.T, np.ones(r)])) == r:
            break
    outer = 2 * D * base
    k = 1 + rng.multinomial(D - r, np.ones(r) / r)
    lam = k / D
    beta = (outer.T @ k) // D
    c = make_circuit(outer, beta)
    expected = {tuple(a): l for a, l in zip(outer.tolist(), lam)}
    assert np.allclose(c.signature, [expected[a] for a in c.outer], atol=1e-9)


def test_circuit_json(c2):
    d = c2.to_json()
    assert d["outer"] == [[0, 2], [6, 2]] and d["inner"] == [2, 2]
