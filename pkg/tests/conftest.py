import numpy as np
import pytest

from iscat.grid import Grid, GridFunction, make_grid_function

# The default desk-scale grid used across the suite.
L_DEFAULT = 64.0
N_DEFAULT = 1024


@pytest.fixture(scope="session")
def grid() -> Grid:
    return Grid(L=L_DEFAULT, N=N_DEFAULT)


@pytest.fixture(scope="session")
def gaussian(grid) -> GridFunction:
    return make_grid_function(grid, lambda x: np.exp(-(x**2)))


def gaussian_amp(grid: Grid, amp: complex) -> GridFunction:
    return make_grid_function(grid, lambda x: amp * np.exp(-(x**2)))


def sech_amp(grid: Grid, amp: complex) -> GridFunction:
    return make_grid_function(grid, lambda x: amp / np.cosh(x))


def band_limited(grid: Grid, coeff_pairs) -> GridFunction:
    """Build sum of c_k * exp(i*xi_k*x) from (k, c_k) pairs (k = FFT index)."""
    x = grid.x
    vals = np.zeros_like(x, dtype=np.complex128)
    for k, c in coeff_pairs:
        vals += c * np.exp(1j * grid.xi[k] * x)
    return GridFunction(grid, vals)
