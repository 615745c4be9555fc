import pytest

from lnmpm.geometry import DESIGN_POINT, rasterize
from lnmpm.mode_solver import find_mode


@pytest.fixture(scope="session")
def signal_mode():
    """TE00 at 1530 nm on the 10 nm design-point grid."""
    return find_mode(rasterize(DESIGN_POINT, 10, 1.53), "TE00")


@pytest.fixture(scope="session")
def pump_mode():
    """TE01 at 765 nm on the 10 nm design-point grid."""
    return find_mode(rasterize(DESIGN_POINT, 10, 0.765), "TE01")


@pytest.fixture(scope="session")
def coarse_grid():
    return rasterize(DESIGN_POINT, 20, 1.53)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_RESULTS
    except ImportError:
        return
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
