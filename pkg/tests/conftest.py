import pytest

_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def criterion():
    """Recorder for the acceptance checks; lines resurface after the run."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"[criterion {number:02d}] {'PASS' if passed else 'FAIL'}: {detail}"
        _LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
