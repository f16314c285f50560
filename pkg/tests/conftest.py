import numpy as np
import pytest

from hrfl.intensity import (
    ConstantDensity,
    ConstantMark,
    IntensityModel,
    ProductKernel,
    UniformVelocity,
)


@pytest.fixture(scope="session")
def reference_model():
    """The homogeneous reference model: rho = 1, v ~ U[-1, 1], r = 1."""
    return IntensityModel(ConstantDensity(1.0),
                          ProductKernel(UniformVelocity(-1.0, 1.0),
                                        ConstantMark(1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
