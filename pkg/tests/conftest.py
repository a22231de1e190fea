import pytest

from fermi_blockade.gas import EXPERIMENT_N_PER_SPIN, EXPERIMENT_TRAP, SR87, derive_scales, \
    solve_fugacity, solve_fugacity_uniform
from fermi_blockade.util import THREADS_ENV


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)


@pytest.fixture(scope="session")
def experiment_scales():
    return derive_scales(EXPERIMENT_TRAP, EXPERIMENT_N_PER_SPIN, SR87)


@pytest.fixture(scope="session")
def degenerate_state():
    return solve_fugacity(0.1)


@pytest.fixture(scope="session")
def warm_state():
    return solve_fugacity(0.3)


@pytest.fixture(scope="session")
def dilute_state():
    return solve_fugacity(1.0)


@pytest.fixture(scope="session")
def classical_state():
    return solve_fugacity(20.0)


@pytest.fixture(scope="session")
def cold_uniform_state():
    return solve_fugacity_uniform(0.01)
