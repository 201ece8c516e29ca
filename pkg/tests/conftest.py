"""Shared model fixtures; session-scoped because cache construction dominates."""

import numpy as np
import pytest

from plasmakin.dielectric import DielectricModel
from plasmakin.distributions import BumpMixture, ExponentialFamily, Maxwellian
from plasmakin.equilibrium import HSolution
from plasmakin.potentials import CoulombPotential, gaussian_soft, zero_potential


@pytest.fixture(scope="session")
def maxwellian():
    return Maxwellian()


@pytest.fixture(scope="session")
def two_temperature():
    return BumpMixture([(0.85, (0, 0, 0), 1.0), (0.15, (0, 0, 0), 1.3)])


@pytest.fixture(scope="session")
def screening_mixture():
    return BumpMixture([(0.75, (0, 0, 0), 1.0), (0.25, (0, 0, 0), 1.35)])


@pytest.fixture(scope="session")
def exp_tail():
    return ExponentialFamily(gamma=1)


@pytest.fixture(scope="session")
def coulomb():
    return CoulombPotential()


@pytest.fixture(scope="session")
def soft():
    return gaussian_soft()


@pytest.fixture(scope="session")
def model_mc(maxwellian, coulomb):
    return DielectricModel(maxwellian, coulomb)


@pytest.fixture(scope="session")
def model_ms(maxwellian, soft):
    return DielectricModel(maxwellian, soft)


@pytest.fixture(scope="session")
def model_zero(maxwellian):
    return DielectricModel(maxwellian, zero_potential())


@pytest.fixture(scope="session")
def hsol_ms(model_ms):
    return HSolution(model_ms, k_max=20.0, n_k=160)


@pytest.fixture(scope="session")
def hsol_mc(model_mc):
    return HSolution(model_mc)


LINE_KW = dict(s_max=10.0, n_s=256, r_nodes=(8, 12, 20))


@pytest.fixture(scope="session")
def line_kw():
    return dict(LINE_KW)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
