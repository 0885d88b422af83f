import numpy as np
import pytest

from isomassive.elliptic import complete_integrals
from isomassive.isograph import PRESETS, preset


@pytest.fixture(scope="session")
def graphs():
    return {name: preset(name) for name in PRESETS}


@pytest.fixture(scope="session")
def ctx05():
    return complete_integrals(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
