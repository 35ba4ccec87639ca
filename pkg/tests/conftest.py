import pytest

_LINES = []


@pytest.fixture
def report_line():
    """Record one summary line per acceptance criterion (shown at the end of the run)."""

    def add(line: str):
        _LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
