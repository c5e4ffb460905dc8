"""Shared pytest plumbing: a verdict fixture for the acceptance suite.

Each acceptance test records one labeled PASS/FAIL line; the lines are
replayed in a terminal section at the end of the run so the whole
contract can be scanned in one place.
"""

import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    def record(name: str, ok: bool, detail: str = "") -> None:
        line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.line(line)
