import numpy as np
import pytest

from bandsure import _accel

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE_LINES: dict[str, tuple[bool, str]] = {}


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    previous = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symmetric(rng, p):
    g = rng.standard_normal((p, p))
    return g + g.T


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
