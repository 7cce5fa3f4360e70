import pytest

_verdicts: list[str] = []


@pytest.fixture
def acceptance_verdict():
    """Record a criterion's pass/fail line for the terminal summary."""

    def record(line: str) -> None:
        _verdicts.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
