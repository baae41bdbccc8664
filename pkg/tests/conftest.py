import numpy as np
import pytest

from blindeq import REFERENCE_CHANNEL, qpsk_alphabet

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion.

    Usage: ``criterion(number, title, passed, detail)``; the assertion is
    left to the test so failures still fail.
    """

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}  {detail}")


@pytest.fixture(scope="session")
def qpsk():
    return qpsk_alphabet()


@pytest.fixture(scope="session")
def ref_taps():
    return np.array(REFERENCE_CHANNEL)
