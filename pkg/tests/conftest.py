import pytest

from nvsqueeze.model import SystemParams


def ref_params(omega_over_v=2.0, delta_over_a=0.0, **kw):
    """g/2pi = 40 kHz, v/2pi = 1 MHz, omega_m/2pi = 2 GHz."""
    return SystemParams.from_ratios(omega_over_v, delta_over_a, **kw)


@pytest.fixture
def p2():
    return ref_params(2.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
