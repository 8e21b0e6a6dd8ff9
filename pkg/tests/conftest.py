import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        _VERDICTS.append(f"[{number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
