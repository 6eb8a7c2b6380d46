import sys

import numpy as np
import pytest

from histentropy.decoherence import explicit

ALPHA = np.diag([1.0, 0.0]).astype(complex)
BETA = np.diag([0.0, 1.0]).astype(complex)


def x1_operator() -> np.ndarray:
    return 0.5 * (np.kron(ALPHA, BETA) + np.kron(BETA, ALPHA))


def x2_operator() -> np.ndarray:
    return np.kron(ALPHA, ALPHA)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def d_x1():
    return explicit(x1_operator())


@pytest.fixture
def d_x2():
    return explicit(x2_operator())


def bloch_projector(a: float, phase: float = 0.0) -> np.ndarray:
    """General rank-1 projector on C^2 with diagonal (a, 1-a)."""
    b = np.sqrt(a * (1 - a)) * np.exp(1j * phase)
    return np.array([[a, b], [np.conj(b), 1 - a]], dtype=complex)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
