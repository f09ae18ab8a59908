"""Grid module: transforms, derivatives, norms, file formats.

Oracle values used below (independent closed forms, frozen before the
implementation):
  * unitary Fourier transform of exp(-x^2) is (1/sqrt(2)) exp(-xi^2/4)
  * integral of exp(-2 x^2) over the line is sqrt(pi/2) = 1.2533141373155003
  * a pure grid mode exp(i xi_k x) transforms to a single coefficient of
    magnitude L * (2 pi)**(-1/2)
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iscat.grid import (
    Grid,
    GridFunction,
    besov_smallness,
    integral,
    load_gridfunction,
    make_grid_function,
    save_gridfunction,
    sobolev_norm_sq,
    spectral_derivative,
    to_physical,
    to_spectral,
)

from conftest import band_limited

SQRT_PI_OVER_2 = 1.2533141373155003  # integral exp(-2x^2) dx


class TestGridConstruction:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            Grid(L=64.0, N=1000)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            Grid(L=64.0, N=4)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            Grid(L=0.0, N=64)

    def test_frequencies_symmetric_except_nyquist(self, grid):
        xi = np.sort(grid.xi)
        # one unpaired (Nyquist) mode, the rest symmetric about 0
        assert np.isclose(xi[0], -np.pi * grid.N / grid.L)
        body = xi[1:]
        assert np.allclose(body, -body[::-1])

    def test_values_length_checked(self, grid):
        with pytest.raises(ValueError):
            GridFunction(grid, np.zeros(grid.N - 1))

    def test_nonfinite_rejected(self, grid):
        bad = np.zeros(grid.N)
        bad[3] = np.inf
        with pytest.raises(ValueError):
            GridFunction(grid, bad)


class TestToSpectral:
    def test_zero_maps_to_zero(self, grid):
        f = GridFunction(grid, np.zeros(grid.N))
        assert np.all(to_spectral(f).coeffs == 0)

    def test_pure_mode_single_coefficient(self, grid):
        k = 17
        f = band_limited(grid, [(k, 1.0)])
        coeffs = to_spectral(f).coeffs
        mags = np.abs(coeffs)
        assert mags.argmax() == k
        # magnitude L*(2 pi)^(-1/2), all other modes at machine zero
        assert math.isclose(mags[k], grid.L * (2 * np.pi) ** -0.5, rel_tol=1e-12)
        mags[k] = 0.0
        assert mags.max() < 1e-10 * grid.L

    def test_gaussian_matches_closed_form(self, grid, gaussian):
        # FT of exp(-x^2) under the unitary convention
        coeffs = to_spectral(gaussian).coeffs
        exact = (1 / np.sqrt(2)) * np.exp(-grid.xi**2 / 4)
        assert np.max(np.abs(coeffs - exact)) <= 1e-12

    def test_round_trip_identity(self, grid, gaussian):
        back = to_physical(to_spectral(gaussian))
        assert np.max(np.abs(back.values - gaussian.values)) < 1e-13


class TestSpectralDerivative:
    def test_constant_derivative_vanishes(self, grid):
        f = GridFunction(grid, np.ones(grid.N))
        df = spectral_derivative(f, 1)
        assert np.max(np.abs(df.values)) < 1e-14

    def test_sine_eigenfunction(self, grid):
        f = make_grid_function(grid, lambda x: np.sin(2 * np.pi * x / grid.L))
        d2 = spectral_derivative(f, 2)
        expected = -((2 * np.pi / grid.L) ** 2) * f.values
        assert np.max(np.abs(d2.values - expected)) < 1e-12

    def test_gaussian_first_derivative(self, grid, gaussian):
        df = spectral_derivative(gaussian, 1)
        exact = -2 * grid.x * np.exp(-grid.x**2)
        assert np.max(np.abs(df.values - exact)) <= 1e-10

    def test_order_zero_is_identity(self, grid, gaussian):
        assert np.array_equal(spectral_derivative(gaussian, 0).values, gaussian.values)

    def test_order_cap_enforced(self, grid, gaussian):
        with pytest.raises(ValueError):
            spectral_derivative(gaussian, 9)

    def test_composition_exact(self, grid, gaussian):
        # d^a then d^b agrees with d^(a+b) exactly in frequency space
        ab = spectral_derivative(spectral_derivative(gaussian, 2), 3)
        direct = spectral_derivative(gaussian, 5)
        ca = to_spectral(ab).coeffs
        cd = to_spectral(direct).coeffs
        # two FFT round trips of roundoff, amplified by xi^5
        assert np.max(np.abs(ca - cd)) < 1e-11 * max(1.0, np.max(np.abs(cd)))


class TestSobolevNorm:
    def test_zero(self, grid):
        f = GridFunction(grid, np.zeros(grid.N))
        assert sobolev_norm_sq(f, 0.7) == 0.0

    def test_s0_is_l2_mass(self, grid, gaussian):
        l2 = float(grid.h * np.sum(np.abs(gaussian.values) ** 2))
        assert math.isclose(sobolev_norm_sq(gaussian, 0.0), l2, rel_tol=1e-12)

    def test_gaussian_l2_closed_form(self, gaussian):
        assert abs(sobolev_norm_sq(gaussian, 0.0) - SQRT_PI_OVER_2) <= 1e-10

    def test_range_enforced(self, gaussian):
        with pytest.raises(ValueError):
            sobolev_norm_sq(gaussian, -1.0)


class TestBesov:
    def test_zero(self, grid):
        assert besov_smallness(GridFunction(grid, np.zeros(grid.N))) == 0.0

    def test_single_block_exact(self, grid):
        # supported in 2^m <= |xi| < 2^(m+1)  ->  exactly 2^(-m/2)*||f||_L2
        m = 2
        ks = [k for k in range(grid.N) if 2**m <= abs(grid.xi[k]) < 2 ** (m + 1)]
        f = band_limited(grid, [(ks[0], 0.3), (ks[-1], -0.2)])
        l2 = math.sqrt(sobolev_norm_sq(f, 0.0))
        assert math.isclose(besov_smallness(f), 2 ** (-m / 2) * l2, rel_tol=1e-12)

    def test_small_gaussian_in_smallness_regime(self, grid):
        f = make_grid_function(grid, lambda x: 0.1 * np.exp(-(x**2)))
        assert besov_smallness(f) < 0.2


class TestFileFormats:
    def test_json_round_trip(self, tmp_path, grid, gaussian):
        p = str(tmp_path / "u.json")
        save_gridfunction(gaussian, p)
        g2 = load_gridfunction(p)
        assert g2.grid == grid
        assert np.array_equal(g2.values, gaussian.values)

    def test_csv_round_trip(self, tmp_path, grid):
        f = make_grid_function(grid, lambda x: np.exp(-(x**2)) * (1 + 0.5j))
        p = str(tmp_path / "u.csv")
        save_gridfunction(f, p)
        g2 = load_gridfunction(p)
        assert g2.grid.N == grid.N
        assert math.isclose(g2.grid.L, grid.L, rel_tol=1e-12)
        assert np.max(np.abs(g2.values - f.values)) < 1e-15

    def test_deterministic_bytes(self, tmp_path, gaussian):
        p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_gridfunction(gaussian, p1)
        save_gridfunction(gaussian, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()


# -- property tests ----------------------------------------------------------

coeff = st.complex_numbers(
    min_magnitude=0.0, max_magnitude=2.0, allow_nan=False, allow_infinity=False
)


@st.composite
def band_limited_data(draw, max_modes=6):
    grid = Grid(L=32.0, N=256)
    n = draw(st.integers(min_value=1, max_value=max_modes))
    ks = draw(
        st.lists(
            st.integers(min_value=1, max_value=grid.N // 2 - 2),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    cs = draw(st.lists(coeff, min_size=n, max_size=n))
    # mirror half the modes to negative frequencies
    pairs = [(k if i % 2 == 0 else grid.N - k, c) for i, (k, c) in enumerate(zip(ks, cs))]
    return band_limited(grid, pairs)


@given(band_limited_data())
@settings(max_examples=40, deadline=None)
def test_parseval_property(f):
    l2_phys = float(f.grid.h * np.sum(np.abs(f.values) ** 2))
    l2_spec = sobolev_norm_sq(f, 0.0)
    assert abs(l2_phys - l2_spec) <= 1e-10 * max(1.0, l2_phys)


@given(band_limited_data(), st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_derivative_composition_property(f, a, b):
    ab = spectral_derivative(spectral_derivative(f, a), b)
    direct = spectral_derivative(f, a + b)
    ca, cd = to_spectral(ab).coeffs, to_spectral(direct).coeffs
    assert np.max(np.abs(ca - cd)) <= 1e-9 * max(1.0, float(np.max(np.abs(cd))))


@given(band_limited_data())
@settings(max_examples=40, deadline=None)
def test_besov_dominates_h_minus_half_property(f):
    lhs = besov_smallness(f)
    rhs = math.sqrt(sobolev_norm_sq(f, -0.5))
    assert lhs >= rhs - 1e-9 * max(1.0, rhs)


@given(band_limited_data())
@settings(max_examples=30, deadline=None)
def test_integral_matches_zero_mode_property(f):
    # h*sum(u) equals sqrt(2 pi) * u_hat(0)
    zero_mode = to_spectral(f).coeffs[0]
    assert abs(integral(f) - math.sqrt(2 * np.pi) * zero_mode) <= 1e-9
