import numpy as np
import pytest

from sh2d.grid import GridSpec
from sh2d.pointop import PointOperator, PointOpParams
from sh2d.potential import make_gaussian


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(L=40.0, N=64)


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(L=40.0, N=128)


@pytest.fixture(scope="session")
def grid256():
    return GridSpec(L=40.0, N=256)


@pytest.fixture(scope="session")
def op128(grid128):
    return PointOperator(PointOpParams(0.0), grid128)


@pytest.fixture(scope="session")
def op256(grid256):
    return PointOperator(PointOpParams(0.0), grid256)


@pytest.fixture(scope="session")
def gauss128(grid128):
    return make_gaussian(1.0, grid128)


@pytest.fixture(scope="session")
def gauss256(grid256):
    return make_gaussian(1.0, grid256)


def random_complex(grid, rng, width=3.0):
    """Smooth localized complex field: random phase-modulated Gaussian plus noise."""
    X, Y = grid.coords
    base = np.exp(-(X ** 2 + Y ** 2) / (2 * width ** 2))
    k = rng.normal(size=2)
    noise = rng.normal(size=X.shape) + 1j * rng.normal(size=X.shape)
    return base * np.exp(1j * (k[0] * X + k[1] * Y)) + 0.05 * noise * base


# acceptance report -------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Callable that records one summary line for the terminal report."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(line):
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
