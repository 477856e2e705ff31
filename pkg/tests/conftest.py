import numpy as np
import pytest

from ulafocus.array_model import ArrayConfig


@pytest.fixture
def ref_cfg():
    # 101 elements over 25 wavelengths at 3 GHz
    return ArrayConfig.from_aperture(101, 2.5, wavelength=0.1)


@pytest.fixture
def small_cfg():
    return ArrayConfig(M=2, delta_t=0.3, wavelength=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
