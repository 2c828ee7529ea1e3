import numpy as np
import pytest

from curetest import Covariate, CovariateSpec, Sample
from curetest.sample import CONTINUOUS, DISCRETE, NOMINAL, X_BLOCK, Z_BLOCK


def make_sample(time, status, z=None, kind=CONTINUOUS, levels=None):
    time = np.asarray(time, dtype=float)
    if z is None:
        z = np.zeros(len(time))
    spec = CovariateSpec((Covariate("z", kind, Z_BLOCK, levels),))
    return Sample.from_arrays(time, status, [z], spec)


def make_xz_sample(time, status, x, z, x_kind=CONTINUOUS, z_kind=CONTINUOUS):
    spec = CovariateSpec((Covariate("x", x_kind, X_BLOCK), Covariate("z", z_kind, Z_BLOCK)))
    return Sample.from_arrays(time, status, [x, z], spec)


def random_sample(rng, n, kind=CONTINUOUS, ties=False):
    time = rng.exponential(1.0, n)
    if ties:
        time = np.round(time, 1)
    status = (rng.random(n) < 0.6).astype(int)
    if kind == CONTINUOUS:
        z = rng.uniform(-1, 1, n)
        return make_sample(time, status, z)
    if kind == DISCRETE:
        return make_sample(time, status, rng.integers(1, 4, n).astype(float), DISCRETE)
    labels = np.array(["a", "b", "c"], dtype=object)
    return make_sample(time, status, labels[rng.integers(0, 3, n)], NOMINAL, ("a", "b", "c"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
