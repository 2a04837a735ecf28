import numpy as np
import pytest

from crystal_sff.rng import derive_stream


@pytest.fixture
def rng():
    return derive_stream(12345, 0)


def assert_unitary(U, tol=1e-12):
    d = U.shape[0]
    assert np.abs(U.conj().T @ U - np.eye(d)).max() <= tol


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line (even under output capture) and keep it for the summary."""

    def _report(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
