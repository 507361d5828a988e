import numpy as np
import pytest

from crspde.spectral import ScalarField, VectorField3, make_grid
from crspde.studies import DEFAULT_CALIBRATION_SEEDS, calibrate_lambda


def smooth_field(grid, seed, decay=0.1):
    """Random band-limited complex field (spectrally decayed coefficients)."""
    rng = np.random.default_rng(seed)
    shape = (grid.n, grid.n)
    co = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * np.exp(-decay * grid.ksq)
    return ScalarField.from_coeffs(grid, co)


def smooth_real_field(grid, seed, decay=0.1):
    return ScalarField.from_values(grid, smooth_field(grid, seed, decay).values.real)


def smooth_vector(grid, seed, decay=0.1):
    return VectorField3([smooth_field(grid, 1000 * seed + j, decay) for j in range(3)])


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)


@pytest.fixture(scope="session")
def grid256():
    return make_grid(256)


@pytest.fixture(scope="session")
def lam256():
    """Gate threshold calibrated once per session (95% quantile, 32 seeds)."""
    return calibrate_lambda(256, 0.3, DEFAULT_CALIBRATION_SEEDS,
                            zero_mean_flags=(False, False, True))
