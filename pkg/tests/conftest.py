"""Shared helpers: per-criterion pass/fail lines for the acceptance run."""

from contextlib import contextmanager

import pytest

_LINES: list[str] = []


def _record(num: int, ok: bool, desc: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {desc}"
    _LINES.append(line)
    print(line)


@pytest.fixture
def criterion():
    """Context manager fixture: records one line per acceptance criterion."""
    @contextmanager
    def _criterion(num: int, desc: str):
        try:
            yield
        except BaseException:
            _record(num, False, desc)
            raise
        _record(num, True, desc)
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.line(line)
