import numpy as np
import pytest

from ballistic_lab.dynamics import ChainConfig
from ballistic_lab.lattice import BoxSpec, HeightField, recenter
from ballistic_lab.sampler import SamplerMode, SamplerParams, draw_samples


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def box1():
    return BoxSpec(1, 1)


@pytest.fixture
def cfg10():
    return ChainConfig(BoxSpec(1, 10))


@pytest.fixture
def ramp():
    # d=1 heights (0, 1, 2) at (-1, 0, 1)
    return HeightField.from_heights(BoxSpec(1, 1), [0, 1, 2])


@pytest.fixture
def ramp_sample(ramp):
    return recenter(ramp)


@pytest.fixture(scope="session")
def small_samples():
    params = SamplerParams(
        d=1, N=12, mode=SamplerMode.GEOMETRIC, value=0.01, seed=7, replicas=400
    )
    return draw_samples(params)
