import numpy as np
import pytest

from fracnehari import ProblemParams, build_basis, lambda0_estimate, run_two_solutions
from fracnehari.model import default_weight


@pytest.fixture(scope="session")
def basis():
    return build_basis(128, 16, 64)


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(32, 8, 16)


def make_params(basis, lam=1.0, **kw):
    opts = dict(p=0.75, q=0.75, alpha=1.5, beta=1.5)
    opts.update(kw)
    return ProblemParams(lam, basis, opts["p"], opts["q"], opts["alpha"], opts["beta"],
                         default_weight(basis.nodes))


@pytest.fixture(scope="session")
def lambda0(basis):
    return lambda0_estimate(make_params(basis), n_samples=64, seed=0)


@pytest.fixture(scope="session")
def params(basis, lambda0):
    return make_params(basis, 0.5 * lambda0.lambda0_hat)


@pytest.fixture(scope="session")
def two_solutions(params, lambda0):
    return run_two_solutions(params, n_starts=16, seed=0, lambda0_hat=lambda0.lambda0_hat)


@pytest.fixture(scope="session")
def first(two_solutions):
    return two_solutions.first


@pytest.fixture(scope="session")
def second(two_solutions):
    return two_solutions.second


@pytest.fixture(scope="session")
def superlinear_result(basis):
    from fracnehari import default_model, mp_solve

    return mp_solve(default_model(), basis, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def _criterion_key(line):
    label = line.split(":")[0].split()[-1]
    return int(label.rstrip("abc")), label


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)
