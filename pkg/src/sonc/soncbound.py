"""SONC bounds by circuit generation, and SONC certificates.

The solver works on the dual side: for a set of circuits it maximizes
``-f^T y`` over vectors ``y`` indexed by the support, subject to one power
cone constraint per circuit, ``y_alpha >= 0`` on even exponents and either
``y_0 = 1`` (bound problem) or ``y_alpha <= 1`` on Newton vertices (existence
problem).  Cone multipliers of the interior-point solution are the circuit
polynomial coefficients of a SONC decomposition; pricing asks, for every
non-vertex exponent ``beta``, for the circuit with inner exponent ``beta``
whose power cone inequality is most violated by ``y``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from sonc.circuits import (
    Circuit,
    CircuitError,
    CircuitPolyCoeffs,
    make_circuit,
    nonnegativity_margin,
)
from sonc.cones import SlaterMode, power, ray, slater_point
from sonc.ipm import ConicProblem, IpmSolution, IpmStatus, solve_conic
from sonc.lp import LpStatus, solve_lp
from sonc.polyrep import Exponent, SparsePolynomial, grlex_key, is_even

log = logging.getLogger(__name__)

CLAMP_FLOOR = 1e-12
LAMBDA_SUPPORT = 1e-10


class SoncError(RuntimeError):
    pass


class CircuitNotOnSupport(SoncError, ValueError):
    pass


class UncoveredExponent(SoncError, ValueError):
    pass


class SolverFailure(SoncError):
    def __init__(self, message, round_index=None, phase=None):
        super().__init__(message)
        self.round_index = round_index
        self.phase = phase


@dataclass(frozen=True)
class NoSoncBoundEvidence:
    reason: str
    exponent: Exponent | None = None
    value: float | None = None

    def describe(self) -> str:
        msg = self.reason
        if self.exponent is not None:
            msg += f" at exponent {list(self.exponent)}"
        if self.value is not None:
            msg += f" (value {self.value:.6g})"
        return msg


class NoSoncBound(SoncError):
    def __init__(self, evidence: NoSoncBoundEvidence):
        super().__init__(evidence.describe())
        self.evidence = evidence


class Phase(enum.Enum):
    PHASE1 = "phase1"
    PHASE2 = "phase2"


@dataclass
class SoncConfig:
    gap_tol: float = 1e-8
    viol_tol: float = 1e-8
    max_rounds: int = 60
    phase1_shift: float | None = None  # default 1 + sum |f_alpha|
    phase1_escalations: int = 3  # default shift only: retries with 100x larger shifts
    skip_phase1: bool = False
    verify_tol: float = 1e-8
    phase1_tol: float = 1e-7
    ipm_step: str = "long"
    ipm_max_iters: int = 5000


# ---------------------------------------------------------------- problems


@dataclass
class DualProblem:
    """A conic problem together with the bookkeeping needed to read it back."""

    poly: SparsePolynomial
    circuits: list[Circuit]
    mode: Phase
    conic: ConicProblem
    ray_exponents: list[Exponent]  # ray atoms follow the power atoms in this order
    slack_of: dict[Exponent, int] = field(default_factory=dict)

    def start(self, theta: float | None = None) -> np.ndarray:
        if self.mode is Phase.PHASE2:
            return slater_point(self.poly.exponents, SlaterMode.PHASE2, theta)
        y = slater_point(self.poly.exponents, SlaterMode.PHASE1, theta)
        slacks = [1.0 - y[self.poly.index(a)] for a in self.slack_of]
        return np.concatenate([y, slacks])


def assemble_dual(p: SparsePolynomial, circuits: Sequence[Circuit], mode: Phase) -> DualProblem:
    """Build the dual conic problem in minimization form (objective ``f^T y``)."""
    m = len(p)
    atoms = []
    for c in circuits:
        try:
            idx = [p.index(a) for a in c.outer] + [p.index(c.inner)]
        except KeyError:
            raise CircuitNotOnSupport(f"{c} uses an exponent outside the support") from None
        atoms.append(power(idx, c.signature))

    inners = {c.inner for c in circuits}
    exempt = set(p.vertices) if mode is Phase.PHASE1 else {p.origin}
    for a in p.exponents:
        if a not in exempt and a not in p.monomial_squares and a not in inners:
            raise UncoveredExponent(f"exponent {list(a)} is not a monomial square and no circuit has it as inner exponent")

    rays = list(p.even_support)
    atoms += [ray(p.index(a)) for a in rays]
    c = np.array(p.coef_vector)
    slack_of: dict[Exponent, int] = {}
    if mode is Phase.PHASE2:
        E = np.zeros((1, m))
        E[0, p.index(p.origin)] = 1.0
        d = np.ones(1)
    else:
        V = list(p.vertices)
        E = np.zeros((len(V), m + len(V)))
        for k, a in enumerate(V):
            E[k, p.index(a)] = 1.0
            E[k, m + k] = 1.0
            slack_of[a] = m + k
            atoms.append(ray(m + k))
        d = np.ones(len(V))
        c = np.concatenate([c, np.zeros(len(V))])
    return DualProblem(p, list(circuits), mode, ConicProblem(c, atoms, E, d), rays, slack_of)


# ---------------------------------------------------------------- initial circuits and pricing


def initial_circuits(p: SparsePolynomial) -> list[Circuit] | NoSoncBoundEvidence:
    """One circuit over Newton vertices for every exponent that is not a monomial square.

    Among the basic solutions of the barycentric LP the one with the largest
    weight on the origin is taken, so the origin is an outer exponent
    whenever possible.
    """
    V = list(p.vertices)
    for a in V:
        if a == p.origin:
            continue
        if not is_even(a):
            return NoSoncBoundEvidence("odd exponent on a Newton vertex", a)
        if p.coef(a) < 0:
            return NoSoncBoundEvidence("negative coefficient on a Newton vertex", a, p.coef(a))
    Vset = set(V)
    A = np.vstack([np.array(V, dtype=float).T, np.ones(len(V))])
    cost = np.array([-1.0 if a == p.origin else 0.0 for a in V])
    out = []
    for beta in p.exponents:
        if beta in Vset or beta in p.monomial_squares:
            continue
        res = solve_lp(A, np.append(np.array(beta, dtype=float), 1.0), cost)
        if res.status is not LpStatus.OPTIMAL:
            return NoSoncBoundEvidence("exponent outside the hull of the Newton vertices", beta)
        outer = [V[i] for i in range(len(V)) if res.x[i] > LAMBDA_SUPPORT]
        try:
            out.append(make_circuit(outer, beta))
        except CircuitError as exc:
            return NoSoncBoundEvidence(f"no circuit over the vertices ({exc})", beta)
    return out


def clamped_log(v) -> np.ndarray:
    return np.log(np.maximum(np.asarray(v, dtype=float), CLAMP_FLOOR))


def find_violated_circuit(
    p: SparsePolynomial, y, beta: Sequence[int], viol_tol: float = 1e-8
) -> tuple[Circuit, float] | None:
    """Most violated power cone inequality among circuits with inner exponent ``beta``.

    ``y`` is indexed by the support of ``p``.  Returns the circuit and the
    violation ``|y_beta| - exp(v*)``, or None if nothing is violated by more
    than ``viol_tol * max(1, |y_beta|)``.
    """
    beta = tuple(beta)
    y = np.asarray(y, dtype=float)
    yb = abs(y[p.index(beta)])
    cand = [a for a in p.even_support if a != beta]
    if not cand or yb == 0:
        return None
    A = np.vstack([np.array(cand, dtype=float).T, np.ones(len(cand))])
    cost = clamped_log([y[p.index(a)] for a in cand])
    res = solve_lp(A, np.append(np.array(beta, dtype=float), 1.0), cost)
    if res.status is not LpStatus.OPTIMAL:
        return None
    violation = yb - math.exp(res.objective)
    if violation <= viol_tol * max(1.0, yb):
        return None
    outer = [cand[i] for i in range(len(cand)) if res.x[i] > LAMBDA_SUPPORT]
    try:
        circ = make_circuit(outer, beta)
    except CircuitError as exc:
        log.warning("pricing for %s produced an invalid circuit: %s", beta, exc)
        return None
    return circ, violation


def pricing_candidates(p: SparsePolynomial) -> list[Exponent]:
    V = set(p.vertices)
    return [a for a in p.exponents if a not in V]


def price_all(p, y, known: set, viol_tol) -> list[tuple[Circuit, float]]:
    found = []
    for beta in pricing_candidates(p):
        hit = find_violated_circuit(p, y, beta, viol_tol)
        if hit is not None and hit[0].key not in known:
            found.append(hit)
    return found


# ---------------------------------------------------------------- certificates


@dataclass
class SoncCertificate:
    """``f + gamma = sum_j p_j + sum_alpha delta_alpha z^alpha``."""

    gamma: float
    circuit_terms: list[tuple[Circuit, CircuitPolyCoeffs]]
    square_terms: dict[Exponent, float]
    residual: float = math.nan
    polish_ok: bool = True

    @property
    def bound(self) -> float:
        return -self.gamma

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "bound": self.bound,
            "circuits": [
                {**c.to_json(), "coefs": {"outer": list(k.outer), "inner": k.inner}} for c, k in self.circuit_terms
            ],
            "squares": [{"exp": list(a), "coef": v} for a, v in sorted(self.square_terms.items(), key=lambda kv: grlex_key(kv[0]))],
            "residual": self.residual,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SoncCertificate":
        terms = []
        for item in data["circuits"]:
            outer = tuple(tuple(int(x) for x in a) for a in item["outer"])
            inner = tuple(int(x) for x in item["inner"])
            circ = Circuit(outer, inner, tuple(float(x) for x in item.get("lambda", ())))
            coefs = CircuitPolyCoeffs(tuple(float(x) for x in item["coefs"]["outer"]), float(item["coefs"]["inner"]))
            terms.append((circ, coefs))
        squares = {tuple(int(x) for x in s["exp"]): float(s["coef"]) for s in data["squares"]}
        return cls(float(data["gamma"]), terms, squares, float(data.get("residual", math.nan)))


class _Draft:
    """Mutable certificate under construction."""

    def __init__(self, p: SparsePolynomial, circuits, outer, inner, squares):
        self.p = p
        self.circuits = list(circuits)
        self.outer = [np.array(o, dtype=float) for o in outer]
        self.inner = [float(z) for z in inner]
        self.squares = dict(squares)
        self.alive = [True] * len(self.circuits)

    def live(self):
        return [j for j, ok in enumerate(self.alive) if ok]

    def margin(self, j) -> float:
        c = self.circuits[j]
        if np.any(self.outer[j] <= 0):
            return -math.inf if self.inner[j] != 0 else 0.0
        return nonnegativity_margin(c, CircuitPolyCoeffs(tuple(self.outer[j]), self.inner[j]))[0]

    def contribution(self, alpha) -> float:
        tot = self.squares.get(alpha, 0.0)
        for j in self.live():
            c = self.circuits[j]
            if c.inner == alpha:
                tot += self.inner[j]
            for i, a in enumerate(c.outer):
                if a == alpha:
                    tot += self.outer[j][i]
        return tot

    def outer_slots(self, alpha):
        return [(j, i) for j in self.live() for i, a in enumerate(self.circuits[j].outer) if a == alpha]

    def inner_of(self, alpha):
        return [j for j in self.live() if self.circuits[j].inner == alpha]


def _match_odd(d: _Draft, alpha, target) -> bool:
    js = d.inner_of(alpha)
    if not js:
        return target == 0
    r = target - sum(d.inner[j] for j in js)
    w = np.array([max(d.margin(j), 0.0) for j in js])
    w = w / w.sum() if w.sum() > 0 else np.full(len(js), 1.0 / len(js))
    for j, wj in zip(js, w):
        d.inner[j] += wj * r
    return True


def _match_even(d: _Draft, alpha, target):
    d.squares.pop(alpha, None)
    slack = target - d.contribution(alpha)
    if slack >= 0:
        d.squares[alpha] = slack
        return
    excess = -slack
    slots = d.outer_slots(alpha)
    total = sum(d.outer[j][i] for j, i in slots)
    if total >= excess:
        for j, i in slots:
            d.outer[j][i] *= 1.0 - excess / total
        return
    for j, i in slots:
        d.outer[j][i] = 0.0
    excess -= total
    js = d.inner_of(alpha)
    for j in js:
        d.inner[j] -= excess / len(js)


def _dissolve(d: _Draft):
    """Remove circuit terms whose inner coefficient can be carried elsewhere."""
    order = sorted(d.live(), key=lambda j: abs(d.inner[j]) / max(1e-300, float(np.max(d.outer[j], initial=0.0))))
    for j in order:
        c = d.circuits[j]
        z = d.inner[j]
        others = [k for k in d.inner_of(c.inner) if k != j]
        target = None
        if z == 0.0:
            target = "none"
        elif others:
            k = max(others, key=d.margin)
            if d.margin(k) > abs(z) * (1 + 1e-9) + 1e-300:
                target = k
        if target is None and is_even(c.inner) and d.squares.get(c.inner, 0.0) + z >= 0:
            target = "square"
        if target is None:
            continue
        if target == "square":
            d.squares[c.inner] = d.squares.get(c.inner, 0.0) + z
        elif target != "none":
            d.inner[target] += z
        for a, v in zip(c.outer, d.outer[j]):
            d.squares[a] = d.squares.get(a, 0.0) + v
        d.alive[j] = False


def _absorb(d: _Draft):
    """Move monomial squares into circuit terms where that only raises margins."""
    for alpha in list(d.squares):
        v = d.squares[alpha]
        if v <= 0:
            continue
        slots = d.outer_slots(alpha)
        if slots:
            j, i = slots[0]
            d.outer[j][i] += v
            d.squares[alpha] = 0.0
            continue
        for j in d.inner_of(alpha):
            if d.inner[j] < 0:
                take = min(v, -d.inner[j])
                d.inner[j] += take
                v -= take
                if v <= 0:
                    break
        d.squares[alpha] = max(v, 0.0)


def _repair_with_origin(d: _Draft, tol) -> bool:
    ok = True
    origin = d.p.origin
    for j in d.live():
        mg = d.margin(j)
        if mg >= 0 or (is_even(d.circuits[j].inner) and d.inner[j] >= 0):
            continue
        c = d.circuits[j]
        if origin in c.outer and np.all(np.delete(d.outer[j], c.outer.index(origin)) > 0):
            i0 = c.outer.index(origin)
            lam = np.asarray(c.signature)
            rest = sum(lam[i] * math.log(d.outer[j][i] / lam[i]) for i in range(c.r) if i != i0)
            need = lam[i0] * math.exp((math.log(abs(d.inner[j])) - rest) / lam[i0])
            d.outer[j][i0] = max(d.outer[j][i0], need * (1 + 1e-12))
        elif mg < -tol:
            ok = False
    return ok


def extract_certificate(sol: IpmSolution, dual: DualProblem, tol: float = 1e-8) -> SoncCertificate:
    """Read a SONC decomposition of ``f + gamma`` off the cone multipliers.

    The raw multipliers satisfy the coefficient identity only up to the
    centering residual.  They are repaired so that the identity is exact:
    odd coefficients are matched through inner coefficients, even ones
    through the monomial-square slacks (trimming outer coefficients where a
    slack would turn negative) and the constant through ``gamma``.  Terms are
    then consolidated: circuit terms whose inner coefficient can be carried by
    another term are turned into monomial squares, and monomial squares are
    folded back into circuit terms where that only increases margins.
    """
    if dual.mode is not Phase.PHASE2:
        raise ValueError("certificates come from the bound problem")
    if not sol.atom_multipliers:
        raise SolverFailure("solution carries no multipliers")
    p = dual.poly
    N = len(dual.circuits)
    s = sol.atom_multipliers
    rays = {a: float(s[N + k][0]) for k, a in enumerate(dual.ray_exponents)}
    d = _Draft(p, dual.circuits, [s[j][:-1] for j in range(N)], [s[j][-1] for j in range(N)], rays)

    ok = True
    for alpha in p.odd_support:
        ok &= _match_odd(d, alpha, p.coef(alpha))
    for alpha in p.even_support:
        if alpha != p.origin:
            _match_even(d, alpha, p.coef(alpha))
    d.squares.pop(p.origin, None)

    _dissolve(d)
    _absorb(d)
    ok &= _repair_with_origin(d, tol * p.scale)
    d.squares.pop(p.origin, None)

    gamma = d.contribution(p.origin) - p.coef(p.origin)
    terms = [(d.circuits[j], CircuitPolyCoeffs(tuple(float(x) for x in d.outer[j]), d.inner[j])) for j in d.live()]
    squares = {a: v for a, v in sorted(d.squares.items(), key=lambda kv: grlex_key(kv[0])) if v != 0.0 and a != p.origin}
    cert = SoncCertificate(float(gamma), terms, squares, polish_ok=ok)
    cert.residual = coefficient_residual(p, cert)
    return cert


def certificate_coefficients(cert: SoncCertificate) -> dict[Exponent, float]:
    out: dict[Exponent, float] = {}
    for c, k in cert.circuit_terms:
        for a, v in zip(c.outer, k.outer):
            out[a] = out.get(a, 0.0) + v
        out[c.inner] = out.get(c.inner, 0.0) + k.inner
    for a, v in cert.square_terms.items():
        out[a] = out.get(a, 0.0) + v
    return out


def coefficient_residual(p: SparsePolynomial, cert: SoncCertificate) -> float:
    rhs = certificate_coefficients(cert)
    lhs = dict(p.terms)
    lhs[p.origin] = lhs.get(p.origin, 0.0) + cert.gamma
    keys = set(lhs) | set(rhs)
    return max((abs(lhs.get(a, 0.0) - rhs.get(a, 0.0)) for a in keys), default=0.0)


@dataclass
class VerificationReport:
    valid: bool
    residual: float
    min_margin: float
    details: list[str]

    @property
    def reason(self) -> str:
        if self.valid:
            return "ok"
        return self.details[0].split(":", 1)[0] if self.details else "invalid"


def verify_certificate(p: SparsePolynomial, cert: SoncCertificate, tol: float = 1e-8) -> VerificationReport:
    """Independent check of a certificate.

    Signatures are recomputed from the exponents, every circuit polynomial is
    tested for nonnegativity, monomial squares must be even and nonnegative,
    and the coefficient identity must hold to ``tol * scale`` where ``scale``
    is the largest absolute coefficient of ``p`` (at least 1).
    """
    details: list[str] = []
    scale = p.scale
    min_margin = math.inf
    for c, k in cert.circuit_terms:
        try:
            fresh = make_circuit(c.outer, c.inner)
        except CircuitError as exc:
            details.append(f"circuit: {list(c.outer)} -> {list(c.inner)} is not a circuit ({exc})")
            continue
        if len(k.outer) != fresh.r:
            details.append(f"circuit: coefficient count mismatch for inner {list(c.inner)}")
            continue
        if k.inner == 0 and min(k.outer) >= 0:
            continue  # a sum of monomial squares
        margin, nonneg = nonnegativity_margin(fresh, k)
        if not nonneg:
            min_margin = min(min_margin, margin)
            if margin < -tol * max(1.0, max(abs(x) for x in k.outer + (k.inner,))):
                details.append(f"margin: circuit with inner {list(c.inner)} has margin {margin:.3e}")
        else:
            min_margin = min(min_margin, margin)
    for a, v in cert.square_terms.items():
        if not is_even(a):
            details.append(f"square: exponent {list(a)} is not even")
        elif v < -tol:
            details.append(f"square: coefficient {v:.3e} at {list(a)} is negative")
    residual = coefficient_residual(p, cert)
    if not residual <= tol * scale:
        details.insert(0, f"residual: coefficient mismatch {residual:.3e}")
    return VerificationReport(not details, residual, min_margin, details)


# ---------------------------------------------------------------- driver


@dataclass
class CgReport:
    phase1_iterations: int = 0
    phase2_iterations: int = 0
    circuits_per_iteration: list[int] = field(default_factory=list)
    bound_per_iteration: list[float] = field(default_factory=list)
    dual_gap_per_iteration: list[float] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    termination_reason: str = ""
    initial_circuits: int = 0

    def add(self, phase: Phase, n_circuits: int, bound: float, gap: float, seconds: float):
        self.phases.append(phase.value)
        self.circuits_per_iteration.append(n_circuits)
        self.bound_per_iteration.append(bound)
        self.dual_gap_per_iteration.append(gap)
        self.wall_times.append(seconds)
        if phase is Phase.PHASE1:
            self.phase1_iterations += 1
        else:
            self.phase2_iterations += 1

    @property
    def phase2_bounds(self) -> list[float]:
        return [b for b, ph in zip(self.bound_per_iteration, self.phases) if ph == Phase.PHASE2.value]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "phase", "nCircuits", "bound", "gap", "millis"])
        for i, row in enumerate(zip(self.phases, self.circuits_per_iteration, self.bound_per_iteration, self.dual_gap_per_iteration, self.wall_times), 1):
            ph, nc, b, g, sec = row
            w.writerow([i, ph, nc, repr(b), repr(g), round(sec * 1000)])
        return buf.getvalue()


@dataclass
class BoundResult:
    bound: float
    certificate: SoncCertificate
    report: CgReport
    verification: VerificationReport
    circuits: list[Circuit]
    capped: bool = False
    y: np.ndarray | None = None

    @property
    def certified(self) -> bool:
        return self.verification.valid


def _solve(dual: DualProblem, cfg: SoncConfig, round_index: int) -> IpmSolution:
    sol = solve_conic(dual.conic, dual.start(), gap_tol=cfg.gap_tol, max_iters=cfg.ipm_max_iters, step=cfg.ipm_step)
    if sol.status is not IpmStatus.CONVERGED:
        raise SolverFailure(f"{dual.mode.value} round {round_index}: {sol.status.value} ({sol.message})", round_index, dual.mode)
    return sol


def phase_one(p: SparsePolynomial, cfg: SoncConfig, report: CgReport) -> list[Circuit]:
    """Circuit generation on the existence problem for ``p + shift``.

    With the default shift a positive existence optimum triggers retries with
    shifts 100 times larger (``cfg.phase1_escalations`` of them), keeping the
    circuits found so far.  A user-supplied shift is tried once.
    """
    start = initial_circuits(p)
    if isinstance(start, NoSoncBoundEvidence):
        raise NoSoncBound(start)
    report.initial_circuits = len(start)
    if cfg.phase1_shift is not None:
        shifts = [cfg.phase1_shift]
    else:
        base = 1.0 + float(np.sum(np.abs(p.coef_vector)))
        shifts = [base * 100.0**k for k in range(cfg.phase1_escalations + 1)]
    circuits = list(start)
    known = {c.key for c in circuits}
    for shift in shifts:
        ps = p.shifted(shift)
        value = math.nan
        for rnd in range(1, cfg.max_rounds + 1):
            t0 = time.perf_counter()
            dual = assemble_dual(ps, circuits, Phase.PHASE1)
            sol = _solve(dual, cfg, rnd)
            value = -sol.objective
            report.add(Phase.PHASE1, len(circuits), value, sol.gap, time.perf_counter() - t0)
            log.info("phase1 shift %g round %d: %d circuits, existence value %.3e", shift, rnd, len(circuits), value)
            if value <= cfg.phase1_tol * ps.scale:
                return circuits
            new = price_all(ps, sol.y[: len(ps)], known, cfg.viol_tol)
            if not new:
                break
            for c, _ in new:
                circuits.append(c)
                known.add(c.key)
        log.info("existence problem for shift %g has positive optimum %.3e", shift, value)
    raise NoSoncBound(NoSoncBoundEvidence(f"existence problem for f + {shifts[-1]:g} has a positive optimum", None, value))


def sonc_bound(p: SparsePolynomial, cfg: SoncConfig | None = None, circuits: Sequence[Circuit] | None = None) -> BoundResult:
    """Best SONC lower bound of ``p`` over circuits supported on its support.

    Raises NoSoncBound when the polynomial provably has no SONC bound (for
    the configured phase-one shift).  ``circuits`` overrides the initial
    circuit set of phase two.
    """
    cfg = cfg or SoncConfig()
    report = CgReport()
    if circuits is not None:
        current = list(circuits)
        report.initial_circuits = len(current)
    elif cfg.skip_phase1:
        start = initial_circuits(p)
        if isinstance(start, NoSoncBoundEvidence):
            raise NoSoncBound(start)
        current = start
        report.initial_circuits = len(current)
    else:
        current = phase_one(p, cfg, report)

    known = {c.key for c in current}
    best: BoundResult | None = None
    capped = True
    for rnd in range(1, cfg.max_rounds + 1):
        t0 = time.perf_counter()
        dual = assemble_dual(p, current, Phase.PHASE2)
        sol = _solve(dual, cfg, rnd)
        cert = extract_certificate(sol, dual, cfg.verify_tol)
        ver = verify_certificate(p, cert, cfg.verify_tol)
        report.add(Phase.PHASE2, len(current), cert.bound, sol.objective - cert.bound, time.perf_counter() - t0)
        log.info("phase2 round %d: %d circuits, bound %.10g, dual value %.10g", rnd, len(current), cert.bound, sol.objective)
        res = BoundResult(cert.bound, cert, report, ver, list(current), y=sol.y)
        if ver.valid and (best is None or not best.certified or res.bound >= best.bound):
            best = res
        elif best is None:
            best = res
        new = price_all(p, sol.y, known, cfg.viol_tol)
        if not new:
            capped = False
            break
        for c, _ in new:
            current.append(c)
            known.add(c.key)
        best.report.wall_times[-1] = time.perf_counter() - t0
    report.termination_reason = "iteration_cap" if capped else "no_violated_circuit"
    assert best is not None
    best.capped = capped
    best.circuits = list(current)
    return best


def certificate_to_file(cert: SoncCertificate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cert.to_json(), fh, indent=1)


def certificate_from_file(path) -> SoncCertificate:
    with open(path, encoding="utf-8") as fh:
        return SoncCertificate.from_json(json.load(fh))
