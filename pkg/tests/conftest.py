import pytest

from flatcyl_lab.surface import ProfileParams

# One human-readable verdict line per acceptance criterion, echoed in the
# terminal summary so a plain `pytest` run shows the scoreboard.
ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES.append(
        (number, f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_params():
    return ProfileParams()


@pytest.fixture(scope="session")
def wide_params():
    """Geometry with a long cylinder and a thick neck: every band down to
    n0 is nonempty for both kinds and the band scalings reach their
    asymptotic regime within n <= 1000."""
    return ProfileParams(L=2.0, eps0=3.7)
