"""Acceptance checks, one test (or parameter set) per criterion.

Each check records a PASS/FAIL line that is repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import GOLDEN, record_acceptance
from sonc.circuits import enumerate_circuits, make_circuit
from sonc.cones import barrier, power
from sonc.instances import GeneratorSpec, generate, local_upper_bound, oracle_bound
from sonc.ipm import solve_conic
from sonc.polyrep import evaluate, normalize
from sonc.soncbound import (
    NoSoncBound,
    Phase,
    SoncConfig,
    assemble_dual,
    extract_certificate,
    find_violated_circuit,
    sonc_bound,
    verify_certificate,
)


def _check(criterion, checks):
    """``checks`` maps a description to a bool; records and asserts the conjunction."""
    failed = [k for k, v in checks.items() if not v]
    detail = "; ".join(checks) if not failed else "failed: " + ", ".join(failed)
    record_acceptance(criterion, not failed, detail)
    assert not failed, detail


def test_golden_example():
    t0 = time.perf_counter()
    p = normalize(GOLDEN)
    c1 = make_circuit([(0, 0), (2, 6), (6, 2)], (2, 2))
    d1 = assemble_dual(p, [c1], Phase.PHASE2)
    s1 = solve_conic(d1.conic, d1.start())
    cert1 = extract_certificate(s1, d1)
    hit = find_violated_circuit(p, s1.y, (2, 2))
    res = sonc_bound(p)
    elapsed = time.perf_counter() - t0
    cert = res.certificate
    ver = verify_certificate(p, cert)
    terms = cert.circuit_terms
    _check(1, {
        "gamma -7/8 with C1": abs(cert1.gamma + 7 / 8) <= 1e-5,
        "dual vector (1,0,1/4,1/16,1/16)": np.allclose(s1.y, [1, 0, 1 / 4, 1 / 16, 1 / 16], atol=1e-5),
        "pricing finds C2": hit is not None and hit[0].key == (((0, 2), (6, 2)), (2, 2)),
        "C2 signature (2/3,1/3)": hit is not None and np.allclose(hit[0].signature, [2 / 3, 1 / 3], atol=1e-5),
        "final gamma -1": abs(cert.gamma + 1) <= 1e-5,
        "certificate verifies": ver.valid,
        "structure: one C2 term": len(terms) == 1 and terms[0][0].key == (((0, 2), (6, 2)), (2, 2)),
        "structure: square z1^2 z2^6": set(cert.square_terms) == {(2, 6)} and abs(cert.square_terms[(2, 6)] - 1) <= 1e-5,
        f"runtime < 1 s ({elapsed:.3f} s)": elapsed < 1.0,
    })


def _spiky_support(n):
    terms = {(0,) * n: 1.0, (1,) * n: -1.0}
    for i in range(n):
        for k in (2 * n, 4 * n):
            e = [0] * n
            e[i] = k
            terms[tuple(e)] = 1.0
    return normalize(terms)


def test_circuit_count():
    checks = {}
    for n in (2, 3, 4):
        t0 = time.perf_counter()
        count = len(enumerate_circuits(_spiky_support(n), inner_only=(1,) * n))
        dt = time.perf_counter() - t0
        checks[f"n={n}: {count} circuits, expected {2**n}"] = count == 2**n
        if n == 4:
            checks[f"n=4 runtime < 10 s ({dt:.2f} s)"] = dt < 10
    _check(2, checks)


def _oracle_corpus():
    """Small instances with |supp| <= 12: (n, d, terms) cycled over seeds."""
    shapes = [(2, 6, 5), (2, 8, 7), (2, 8, 9), (3, 6, 6), (3, 6, 8), (4, 4, 4), (4, 6, 6), (4, 6, 7)]
    out = []
    for k in range(24):
        n, d, t = shapes[k % len(shapes)]
        p = generate(GeneratorSpec(n, d, t, seed=1000 + k))
        assert len(p) <= 12
        out.append(p)
    return out


def test_oracle_equivalence():
    worst = 0.0
    count = 0
    for p in _oracle_corpus():
        b = sonc_bound(p).bound
        o = oracle_bound(p)
        worst = max(worst, abs(b - o) / max(1.0, abs(b)))
        count += 1
    _check(3, {f"{count} instances (>= 20)": count >= 20, f"max relative gap {worst:.2e} <= 1e-5": worst <= 1e-5})


def test_soundness():
    rng = np.random.default_rng(2024)
    corpus = [normalize(GOLDEN)] + _oracle_corpus()[:12] + [generate(GeneratorSpec(6, 8, 25, s)) for s in range(3)]
    worst_eval, worst_local, checked = math.inf, math.inf, 0
    for p in corpus:
        r = sonc_bound(p)
        if not r.certified:
            continue
        checked += 1
        z = rng.uniform(-2, 2, size=(100_000, p.n))
        worst_eval = min(worst_eval, (evaluate(p, z).min() + r.certificate.gamma) / p.scale)
        lu = local_upper_bound(p, 50, 0)
        worst_local = min(worst_local, (lu.value - r.bound) / p.scale)
    _check(4, {
        f"{checked}/{len(corpus)} certificates verified": checked == len(corpus),
        f"min (f(z)+gamma)/scale = {worst_eval:.2e} >= -1e-6": worst_eval >= -1e-6,
        f"min (localmin - bound)/scale = {worst_local:.2e} >= -1e-6": worst_local >= -1e-6,
    })


def test_barrier_correctness():
    sigs = {}
    for p in [normalize(GOLDEN)] + _oracle_corpus()[:6]:
        for c in enumerate_circuits(p):
            sigs.setdefault(tuple(np.round(c.signature, 12)), c.signature)
    rng = np.random.default_rng(99)
    worst_g = worst_h = worst_lh = worst_nu = 0.0
    h = 1e-6
    for lam in sigs.values():
        lam = np.asarray(lam)
        atom = power(range(len(lam) + 1), lam)
        for _ in range(100):
            v = rng.uniform(0.2, 3.0, size=len(lam))
            x = np.append(v, math.exp(lam @ np.log(v)) * rng.uniform(-0.9, 0.9))
            ev = barrier(atom, x)
            I = np.eye(len(x))
            fd_g = np.array([(barrier(atom, x + h * e).value - barrier(atom, x - h * e).value) / (2 * h) for e in I])
            fd_h = np.array([(barrier(atom, x + h * e).gradient - barrier(atom, x - h * e).gradient) / (2 * h) for e in I])
            worst_g = max(worst_g, np.linalg.norm(fd_g - ev.gradient) / max(1.0, np.linalg.norm(ev.gradient)))
            worst_h = max(worst_h, np.linalg.norm(fd_h - ev.hessian) / max(1.0, np.linalg.norm(ev.hessian)))
            for t in (0.5, 2.0, 10.0):
                worst_lh = max(worst_lh, abs(barrier(atom, t * x).value - (ev.value - atom.nu * math.log(t))))
            worst_nu = max(worst_nu, abs(float(-ev.gradient @ x) - atom.nu))
    _check(5, {
        f"{len(sigs)} signatures": len(sigs) >= 3,
        f"gradient rel err {worst_g:.1e} <= 1e-6": worst_g <= 1e-6,
        f"Hessian rel err {worst_h:.1e} <= 1e-5": worst_h <= 1e-5,
        f"homogeneity err {worst_lh:.1e} <= 1e-8": worst_lh <= 1e-8,
        f"<-grad F, p> = nu err {worst_nu:.1e} <= 1e-8": worst_nu <= 1e-8,
    })


@pytest.mark.slow
@pytest.mark.parametrize("terms", [25, 50, 100])
def test_desk_scale(terms):
    try:
        specs = [GeneratorSpec(6, 8, terms, seed) for seed in range(10)]
        polys = [generate(s) for s in specs]
    except Exception as exc:
        record_acceptance(6, False, f"terms={terms}: {type(exc).__name__}: {exc}")
        raise
    cfg = SoncConfig(skip_phase1=True)
    rounds_ok = growth_ok = mono_ok = time_ok = certified = 0
    slowest = 0.0
    for p in polys:
        t0 = time.perf_counter()
        r = sonc_bound(p, cfg)
        dt = time.perf_counter() - t0
        slowest = max(slowest, dt)
        b = r.report.phase2_bounds
        rounds_ok += r.report.phase2_iterations <= 10
        growth_ok += len(r.circuits) <= 10 * r.report.initial_circuits
        mono_ok += all(y >= x - 1e-8 * max(1.0, abs(x)) for x, y in zip(b, b[1:]))
        time_ok += dt <= 60
        certified += r.certified
    n = len(polys)
    checks = {
        f"rounds <= 10 on {rounds_ok}/{n} (>= 80%)": rounds_ok >= 0.8 * n,
        f"circuits <= 10x initial on {growth_ok}/{n}": growth_ok == n,
        f"nondecreasing bounds on {mono_ok}/{n}": mono_ok == n,
        f"wall time <= 60 s on {time_ok}/{n} (max {slowest:.1f} s)": time_ok == n,
        f"certified {certified}/{n}": certified == n,
    }
    failed = [k for k, v in checks.items() if not v]
    record_acceptance(6, not failed, f"terms={terms}: " + ("; ".join(checks) if not failed else "failed " + ", ".join(failed)))
    assert not failed


def test_negative_paths():
    checks = {}
    try:
        sonc_bound(normalize({(0, 0): 1, (0, 2): 1, (4, 0): -1, (2, 2): 1}))
        checks["negative vertex rejected"] = False
    except NoSoncBound as exc:
        checks["negative vertex named (4,0)"] = exc.evidence.exponent == (4, 0) and "[4, 0]" in str(exc)
    try:
        sonc_bound(normalize({(0, 0): 1, (3, 0): 1, (0, 2): 1}))
        checks["odd vertex rejected"] = False
    except NoSoncBound as exc:
        checks["odd vertex named (3,0)"] = exc.evidence.exponent == (3, 0) and "[3, 0]" in str(exc)
    try:
        sonc_bound(normalize({(0,): 0, (2,): -10, (4,): 1}), SoncConfig(phase1_shift=1.0))
        checks["inadequate shift rejected"] = False
    except NoSoncBound as exc:
        v = exc.evidence.value
        checks[f"inadequate shift: positive existence optimum ({v:.3g})"] = v is not None and v > 0
    _check(7, checks)
