import pytest

import rdsconley as rc
from rdsconley.primes import DecompSettings


@pytest.fixture(scope="session")
def const1():
    return rc.NoiseModel.constant(1.0)


@pytest.fixture(scope="session")
def const0():
    return rc.NoiseModel.constant(0.0)


@pytest.fixture(scope="session")
def path1(const1):
    return rc.sample_path(const1, 32, 7)


@pytest.fixture(scope="session")
def path0(const0):
    return rc.sample_path(const0, 32, 1)


@pytest.fixture(scope="session")
def ex1_sys(const1):
    return rc.make_system("example1", -0.09, const1)


@pytest.fixture(scope="session")
def ex1_decomp(ex1_sys, path1):
    return rc.prime_decomposition(ex1_sys, path1)


@pytest.fixture(scope="session")
def pitchfork_sys(const0):
    return rc.make_system("pitchfork", 0.5, const0, noise_scale=0.0)


@pytest.fixture(scope="session")
def pitchfork_decomp(pitchfork_sys, path0):
    return rc.prime_decomposition(pitchfork_sys, path0)


@pytest.fixture(scope="session")
def subcrit_settings():
    return DecompSettings()
