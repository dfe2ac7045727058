import contextlib
from dataclasses import dataclass

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@dataclass
class _Entry:
    detail: str = ""


@pytest.fixture
def criterion():
    """``with criterion(n) as c: ...; c.detail = "..."`` records a pass/fail line for criterion n."""

    @contextlib.contextmanager
    def record(n: int):
        entry = _Entry()
        try:
            yield entry
        except BaseException as exc:
            _RESULTS[n] = (False, f"{entry.detail} {type(exc).__name__}: {exc}".strip())
            raise
        _RESULTS[n] = (True, entry.detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
