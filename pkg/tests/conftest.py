import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance_log():
    """``log(number, ok, detail)`` prints a PASS/FAIL line and keeps it for the summary."""

    def log(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
