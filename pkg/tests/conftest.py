import contextlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the end-of-run summary."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        try:
            yield
        except BaseException:
            _RESULTS[number] = (False, title)
            print(f"criterion {number}: FAIL - {title}")
            raise
        _RESULTS[number] = (True, title)
        print(f"criterion {number}: PASS - {title}")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, title = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title}")
