import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, detail)."""

    def record(n, ok, detail=""):
        line = f"CRITERION {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA.append((n, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
