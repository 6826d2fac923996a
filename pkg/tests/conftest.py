import numpy as np
import pytest

_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(number: int, title: str, checks: dict):
        failed = [name for name, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {number:2d} {status}  {title}"
        if failed:
            line += "  (failed: " + "; ".join(failed) + ")"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        assert not failed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20120727)
