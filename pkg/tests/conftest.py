from __future__ import annotations

import numpy as np
import pytest

ACCEPTANCE_RESULTS = []


def record_acceptance(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
    ACCEPTANCE_RESULTS.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gauss_small():
    """Two-dimensional quadratic model with four particles."""
    from mfsampling.gaussian_oracle import GaussianSpec

    A = np.array([[2.5, 0.5], [0.5, 2.0]])
    return GaussianSpec(A, 1.0, np.sqrt(2.0), 4, 4)
