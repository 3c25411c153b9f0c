import numpy as np
import pytest

from multipass import make_gate

ACCEPTANCE_LINES: list[str] = []


def random_gate(rng: np.random.Generator):
    """Haar-uniform SU(2) element from a random unit quaternion."""
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return make_gate(complex(v[0], v[1]), complex(v[2], v[3]))


@pytest.fixture
def rng():
    return np.random.default_rng(20181112)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
