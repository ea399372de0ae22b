import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store the PASS/FAIL line of an acceptance criterion for the summary."""

    def record(number: int, line: str) -> None:
        _CRITERIA[number] = line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
