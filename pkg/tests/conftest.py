import pytest
from hypothesis import HealthCheck, settings

from sonc.circuits import make_circuit
from sonc.polyrep import normalize

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLDEN = {(0, 0): 1, (0, 2): 1, (2, 2): -1, (2, 6): 1, (6, 2): 1}


@pytest.fixture
def golden():
    return normalize(GOLDEN)


@pytest.fixture
def c1():
    return make_circuit([(0, 0), (2, 6), (6, 2)], (2, 2))


@pytest.fixture
def c2():
    return make_circuit([(0, 2), (6, 2)], (2, 2))


# criterion id -> list of (ok, detail); filled by test_acceptance, printed at the end of the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record_acceptance(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p[0] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: " + "; ".join(p[1] for p in parts))
