import pytest

_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def verdict():
    """Record one summary line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_LINES[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])
