import pytest

from actuator_forge import HEAT, build_biorthogonal


@pytest.fixture(scope="session")
def bio_t1_m8():
    return build_biorthogonal(HEAT, 8, 1.0)


@pytest.fixture(scope="session")
def bio_t1_m16():
    return build_biorthogonal(HEAT, 16, 1.0)


@pytest.fixture(scope="session")
def bio_t005_m16():
    return build_biorthogonal(HEAT, 16, 0.05)


@pytest.fixture(scope="session")
def bio_t5_m12():
    return build_biorthogonal(HEAT, 12, 5.0)
