import time

import pytest

_LINES: list[str] = []


class Recorder:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self, label: str, limit: float):
        self.label = label
        self.limit = limit
        self.start = time.perf_counter()

    def finish(self, passed: bool, detail: str) -> bool:
        elapsed = time.perf_counter() - self.start
        in_time = elapsed < self.limit
        ok = passed and in_time
        _LINES.append(
            f"{'PASS' if ok else 'FAIL'}  {self.label}: {detail}; {elapsed:.1f} s (limit {self.limit:.0f} s)"
        )
        return ok


@pytest.fixture
def criterion():
    return Recorder


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES):
        terminalreporter.write_line(line)
