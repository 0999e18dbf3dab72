import numpy as np
import pytest

from opnorm import EigenSequence, EigenSystem

# criterion number -> (passed, message); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def poly2():
    return EigenSystem.polynomial(1.0, 2.0)


@pytest.fixture
def sobolev():
    return EigenSystem.sobolev()


@pytest.fixture
def fz_poly():
    return EigenSystem.fourier_zeta(EigenSequence.polynomial(1.0, 2.0))


@pytest.fixture
def fz_exp():
    return EigenSystem.fourier_zeta(EigenSequence.exponential(1.0, 0.5))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, msg = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
