import numpy as np
import pytest

from ivbgmm import center, compute_suffstats

from oracles import random_dataset

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _CRITERIA.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_data(rng):
    """n=200, p=6, two invalid instruments."""
    y, d, Z = random_dataset(rng, 200, 6, n_invalid=2)
    data = center(y, d, Z)
    return data, compute_suffstats(data)
