import numpy as np
import pytest

_CRITERIA = {}


def record_criterion(number, title, ok, detail=""):
    _CRITERIA[number] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
