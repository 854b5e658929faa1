import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one acceptance line: record(number, passed, detail)."""

    def _record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (passed, detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
