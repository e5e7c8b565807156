import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from xgeoml.spatial import SpatialDataset, build_index
from xgeoml.synth import SynthSpec, generate

settings.register_profile("xgeoml", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("xgeoml")

# acceptance outcomes, printed as one line per criterion at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def linear_data():
    return generate(SynthSpec(response_form="linear"))


@pytest.fixture(scope="session")
def nonlinear_data():
    return generate(SynthSpec(response_form="nonlinear"))


@pytest.fixture(scope="session")
def linear_index(linear_data):
    return build_index(linear_data[0])


@pytest.fixture(scope="session")
def nonlinear_index(nonlinear_data):
    return build_index(nonlinear_data[0])


def make_dataset(coords, X, y, names=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != len(coords):
        X = X.T
    names = names or tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return SpatialDataset(tuple(str(i) for i in range(len(coords))), np.asarray(coords, float), X, names, y)


@pytest.fixture
def small_grid():
    """Noise-free 12x12 grid with smoothly varying coefficients."""
    rng = np.random.default_rng(7)
    m = 12
    v, u = np.divmod(np.arange(m * m), m)
    coords = np.column_stack([u, v]).astype(float)
    X = rng.standard_normal((m * m, 2))
    beta = np.column_stack([1 + u / m, 2 - v / m])
    y = np.sum(beta * X, axis=1) + 0.5
    return make_dataset(coords, X, y), beta
