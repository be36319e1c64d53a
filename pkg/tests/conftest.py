import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict = {}


@pytest.fixture
def report():
    """Record the verdict of one acceptance criterion for the end-of-run summary."""

    def record(criterion: int, passed: bool, detail: str) -> None:
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _RESULTS[criterion] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[k])
