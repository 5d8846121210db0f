import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one ``[X] PASS/FAIL: detail`` line per acceptance criterion."""

    def _report(label, ok, detail):
        _LINES.append(f"[{label}] {'PASS' if ok else 'FAIL'}: {detail}")
        print(_LINES[-1])
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
