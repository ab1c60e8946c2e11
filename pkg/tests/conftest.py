import numpy as np
import pytest

from posfilter import _backend
from posfilter.design import FilterParams, ThetaLayout
from posfilter.fileio import load_filter, load_problem
from posfilter.lti import StateSpace


@pytest.fixture(scope="session")
def plant():
    return load_problem("lls10")[0]


@pytest.fixture(scope="session")
def best_filter(plant):
    return load_filter("filter_best", plant)


@pytest.fixture(scope="session")
def lls10_filter(plant):
    return load_filter("filter_lls10", plant)


@pytest.fixture(scope="session")
def sim_filter(plant):
    return load_filter("filter_sim", plant)


@pytest.fixture(scope="session")
def layout1(plant):
    return ThetaLayout.for_plant(plant, 1)


@pytest.fixture(params=_backend.available())
def backend(request):
    with _backend.using(request.param):
        yield request.param


def random_stable(rng, n, q, p, rho_range=(0.2, 0.95)):
    """Random system whose spectral radius is uniform on ``rho_range``."""
    A = rng.normal(size=(n, n))
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    A *= rng.uniform(*rho_range) / rho
    return StateSpace(A, rng.normal(size=(n, q)), rng.normal(size=(p, n)), rng.normal(size=(p, q)))


def random_filter(rng, order, p=2, m=1):
    return FilterParams(
        rng.uniform(0, 1, (order, order)) / max(order, 1),
        rng.uniform(0, 1, (order, p)),
        rng.uniform(0, 1, (m, order)),
        rng.uniform(0, 1, (m, p)),
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
