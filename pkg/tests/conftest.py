"""Shared pytest hooks: collect acceptance verdicts and print them in the
terminal summary, where capture cannot swallow them."""

from contextlib import contextmanager

import pytest

VERDICTS: list[tuple[str, str]] = []


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for one criterion."""

    @contextmanager
    def record(label):
        try:
            yield
        except BaseException:
            VERDICTS.append(("FAIL", label))
            raise
        VERDICTS.append(("PASS", label))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in VERDICTS:
        terminalreporter.write_line(f"{status}  {label}")
