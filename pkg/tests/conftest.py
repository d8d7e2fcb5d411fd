import pytest

from hetnet.model import LOS, NLOS

_ACCEPTANCE_LINES: list[str] = []

RATIOS = (1, 2, 5, 10, 20, 50)
PROFILES = {"LOS": LOS, "NLOS": NLOS}


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""

    def report(number: int, title: str, passed: bool, detail: str = ""):
        line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
