import numpy as np
import pytest

from multirev.problem import make_custom, planar_rotation


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def conj_square(y):
    """Real representation of ``F(y) = conj(y)^2`` for a complex scalar."""
    y = np.asarray(y, dtype=float)
    a, b = y[..., 0], y[..., 1]
    return np.stack([a * a - b * b, -2.0 * a * b], axis=-1)


def conj_square_dir(y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    a, b = y[..., 0], y[..., 1]
    u, v = z[..., 0], z[..., 1]
    return np.stack([2 * a * u - 2 * b * v, -2.0 * (a * v + b * u)], axis=-1)


@pytest.fixture
def conj_square_problem():
    return make_custom(2, planar_rotation, conj_square, conj_square_dir, epsilon=1e-2)


def as_complex(v):
    v = np.asarray(v)
    return v[..., 0] + 1j * v[..., 1]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
