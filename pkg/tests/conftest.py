"""Collects the acceptance verdicts and prints them after the run."""
import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """``verdict(label, ok, detail)`` records one line and asserts ``ok``."""

    def record(label, ok, detail):
        _VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
