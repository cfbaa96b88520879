import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ball_matrix(rng, n, radius):
    """Random n x n matrix with Frobenius norm uniform in (0, radius]."""
    A = rng.standard_normal((n, n))
    return A / np.linalg.norm(A) * radius * rng.uniform(0.05, 1.0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        passed, detail = mod.RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
