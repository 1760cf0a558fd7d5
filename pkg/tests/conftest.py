import contextlib
import time
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

# criterion number -> (status, detail); filled by the acceptance suite
_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def fixture_dir():
    return DATA


@pytest.fixture
def criterion():
    """Context manager recording pass/fail and wall time for one criterion,
    failing it when the time limit is exceeded."""

    @contextlib.contextmanager
    def run(number, title, limit=None):
        start = time.perf_counter()
        try:
            yield
        except pytest.skip.Exception as exc:
            _ACCEPTANCE[number] = ("SKIP", f"{title}: {exc}")
            raise
        except BaseException:
            _ACCEPTANCE[number] = ("FAIL", f"{title} ({time.perf_counter() - start:.2f}s)")
            raise
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed >= limit:
            _ACCEPTANCE[number] = ("FAIL", f"{title} ({elapsed:.2f}s, limit {limit}s)")
            pytest.fail(f"criterion {number} took {elapsed:.2f}s, limit {limit}s")
        _ACCEPTANCE[number] = ("PASS", f"{title} ({elapsed:.2f}s)")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
