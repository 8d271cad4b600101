import numpy as np
import pytest

from zermelo import CoZermeloProblem, DriftSpec, ZermeloProblem, flat_torus, hyperbolic_disk, sphere

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def torus():
    return flat_torus()


@pytest.fixture(scope="session")
def round_sphere():
    return sphere()


@pytest.fixture(scope="session")
def disk():
    return hyperbolic_disk()


@pytest.fixture(scope="session")
def magnetic_torus(torus):
    return CoZermeloProblem(torus, DriftSpec.form(0, "0.3*sin(x)"))


@pytest.fixture(scope="session")
def sphere_problem(round_sphere):
    return CoZermeloProblem(round_sphere, DriftSpec.form(0, 0))


@pytest.fixture(scope="session")
def zermelo_torus(torus):
    return ZermeloProblem(torus, DriftSpec.vector(0.5, 0))


def torus_states(rng, n):
    return np.stack([rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n)])


def sphere_states(rng, n, rmax=3.0):
    r = rng.uniform(0.05, rmax, n)
    a = rng.uniform(0, 2 * np.pi, n)
    return np.stack([r * np.cos(a), r * np.sin(a), rng.uniform(0, 2 * np.pi, n)])
