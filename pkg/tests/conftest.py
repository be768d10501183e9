"""Shared fixtures, including the acceptance criterion reporter.

Acceptance tests wrap their assertions in the ``criterion`` context
manager; one PASS/FAIL/SKIP line per criterion is echoed at the end of
the run so the gate can be read off the terminal summary.
"""

from __future__ import annotations

from contextlib import contextmanager

import pytest

_RESULTS: list[tuple[str, str]] = []


@pytest.fixture
def criterion():
    @contextmanager
    def _criterion(name: str):
        try:
            yield
        except BaseException as exc:
            status = "SKIP" if isinstance(exc, pytest.skip.Exception) else "FAIL"
            _RESULTS.append((name, status))
            raise
        _RESULTS.append((name, "PASS"))

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _RESULTS:
        terminalreporter.write_line(f"[{status}] {name}")
