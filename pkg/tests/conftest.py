import sys

import pytest

from flatstrip import ConstantNegative, build_collar, enumerate_periodic_orbits, quotient_class


@pytest.fixture(scope="session")
def M():
    return ConstantNegative()


@pytest.fixture(scope="session")
def G(M):
    return M.group


@pytest.fixture(scope="session")
def collar():
    return build_collar(1.0, 0.5, 0.5)


@pytest.fixture(scope="session")
def band_class(collar):
    return quotient_class(collar, collar.band_circle())


@pytest.fixture(scope="session")
def table85(M):
    return enumerate_periodic_orbits(M, 8.5)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES, key=lambda s: (int(str(s).rstrip("ab")), str(s))):
        terminalreporter.write_line(mod.LINES[k])
