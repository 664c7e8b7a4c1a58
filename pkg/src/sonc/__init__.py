"""SONC lower bounds for sparse polynomials via iterative circuit generation."""

from sonc.circuits import Circuit, CircuitPolyCoeffs, enumerate_circuits, make_circuit, nonnegativity_margin
from sonc.instances import GeneratorSpec, generate, local_upper_bound, oracle_bound
from sonc.polyrep import SparsePolynomial, evaluate, newton_vertices, normalize
from sonc.soncbound import (
    BoundResult,
    NoSoncBound,
    SoncCertificate,
    SoncConfig,
    sonc_bound,
    verify_certificate,
)

__all__ = [
    "BoundResult",
    "Circuit",
    "CircuitPolyCoeffs",
    "GeneratorSpec",
    "NoSoncBound",
    "SoncCertificate",
    "SoncConfig",
    "SparsePolynomial",
    "enumerate_circuits",
    "evaluate",
    "generate",
    "local_upper_bound",
    "make_circuit",
    "newton_vertices",
    "nonnegativity_margin",
    "normalize",
    "oracle_bound",
    "sonc_bound",
    "verify_certificate",
]
