"""Collects acceptance verdicts and prints them after the test session."""

import pytest

VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def verdict():
    """``verdict(label, ok, detail)`` records one acceptance line and returns ``ok``."""
    def record(label: str, ok: bool, detail: str = "") -> bool:
        VERDICTS.append((label, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))
