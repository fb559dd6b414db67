from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
RECIPES = ROOT / "recipes"

_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Collects one pass/fail line per acceptance criterion for the summary."""

    def record(number, title, passed, detail=""):
        _CRITERIA.append((number, title, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}  {detail}".rstrip())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def least_squares_instance():
    rng = np.random.default_rng(2024)
    A = rng.standard_normal((200, 32))
    b = rng.standard_normal(200)
    theta = rng.standard_normal(32)
    return A, b, theta
