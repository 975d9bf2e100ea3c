import numpy as np
import pytest

from localsearch.objectives import QuadraticR2, SetOracle

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def r1_design():
    return np.eye(2), np.array([3.0, 4.0])


def r2_design():
    A = np.array([[1.0, 0.0, 1 / np.sqrt(2)], [0.0, 1.0, 1 / np.sqrt(2)]])
    return A, np.array([3.0, 4.0])


@pytest.fixture
def r1():
    return SetOracle(QuadraticR2(*r1_design()))


@pytest.fixture
def r2():
    return SetOracle(QuadraticR2(*r2_design()))
