"""Shared fixtures: expensive cycles and simulations are computed once per session."""
from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
import pytest

from unisync.limit_cycle import adjoint_cycle, find_limit_cycle, monodromy
from unisync.models import fhn, hopf_normal_form, master_reference

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
FOUR_PI = 4 * math.pi

# filled by the acceptance tests, printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def fhn_timed():
    start = time.perf_counter()
    cycle = find_limit_cycle(fhn(), (5.0, -5.0), 10.0)
    return cycle, time.perf_counter() - start


@pytest.fixture(scope="session")
def fhn_cycle(fhn_timed):
    return fhn_timed[0]


@pytest.fixture(scope="session")
def fhn_floquet(fhn_cycle):
    return monodromy(fhn_cycle)


@pytest.fixture(scope="session")
def fhn_adjoint(fhn_cycle, fhn_floquet):
    return adjoint_cycle(fhn_cycle, fhn_floquet)


@pytest.fixture(scope="session")
def hopf_cycle():
    return find_limit_cycle(hopf_normal_form(), (0.5, 0.0), 6.3)


@pytest.fixture(scope="session")
def master_ref():
    return master_reference(FOUR_PI)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
