import numpy as np
import pytest

from emdsm.data import FrequencyGrid
from emdsm.forward import Impulse, SourceSpec, Window, synthesize_dataset
from emdsm.geometry import ObservationFrame, SupportShape

AXES = [(0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]


def frames_for(dirs):
    return [ObservationFrame.from_direction(d) for d in dirs]


@pytest.fixture(scope="session")
def grid20():
    return FrequencyGrid(20.0, 200)


def make_dataset(shape, temporal, dirs=AXES[:2], eps=1.0, mu=1.0, current=(1, 1, 1),
                 grid=None, profile="constant"):
    src = SourceSpec(shape, current, temporal, profile=profile, eps=eps, mu=mu)
    return src, synthesize_dataset(src, frames_for(dirs), grid or FrequencyGrid(20.0, 200))


@pytest.fixture(scope="session")
def cube_t1():
    """Unit cube, t0 = 1, all six axis directions."""
    return make_dataset(SupportShape.cube(0.5), Impulse(1.0), AXES)


@pytest.fixture(scope="session")
def cube_t3():
    return make_dataset(SupportShape.cube(0.5), Impulse(3.0))


@pytest.fixture(scope="session")
def cube_window():
    return make_dataset(SupportShape.cube(0.5), Window(0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.RESULTS[k])
