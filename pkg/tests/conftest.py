import pytest

from renormvol import surfaces
from renormvol.geometry import Euclidean, fundamental_forms
from renormvol.pipeline import analyze


@pytest.fixture(scope="session")
def unit_sphere():
    return analyze(surfaces.sphere(), Euclidean(3))


@pytest.fixture(scope="session")
def ellipsoid():
    return analyze(surfaces.ellipsoid(1.0, 1.3, 0.7), Euclidean(3))


@pytest.fixture(scope="session")
def clifford_torus_like():
    return analyze(surfaces.torus(2.0, 1.0), Euclidean(3))


@pytest.fixture(scope="session")
def sphere_data():
    return fundamental_forms(surfaces.sphere(), Euclidean(3))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
