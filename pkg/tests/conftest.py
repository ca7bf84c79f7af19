import pytest

from dephasim.verification import run_ramsey_grid, run_steady_state_scenario


@pytest.fixture(scope="session")
def grid_points():
    """The full analytic-vs-numeric Ramsey grid (shared; ~seconds)."""
    return run_ramsey_grid()


@pytest.fixture(scope="session")
def steady_result():
    """Two-source thermalization scenario, direct solve plus evolution."""
    return run_steady_state_scenario()
