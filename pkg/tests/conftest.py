import math

import numpy as np
import pytest

from strongcoupling.constraints import build_constraints
from strongcoupling.meanfield import solve_mean_field
from strongcoupling.modes import SourceProfile, build_mode_lattice

L_DEFAULT = 2 * math.pi


@pytest.fixture(scope="session")
def lattice():
    return build_mode_lattice(L_DEFAULT, 1.0, 3.0)


@pytest.fixture(scope="session")
def small_lattice():
    return build_mode_lattice(L_DEFAULT, 1.0, 2.0)


@pytest.fixture(scope="session")
def source():
    return SourceProfile("gaussian", 1.0)


@pytest.fixture(scope="session")
def mf_rest(lattice, source):
    return solve_mean_field(lattice, source, 4.0, velocity=0.0)


@pytest.fixture(scope="session")
def mf_moving(lattice, source):
    return solve_mean_field(lattice, source, 4.0, velocity=0.3)


@pytest.fixture(scope="session")
def cs_moving(lattice, mf_moving):
    return build_constraints(lattice, mf_moving.profile)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
