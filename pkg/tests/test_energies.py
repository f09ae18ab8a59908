import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn
from scipy.special import binom as scipy_binom

from iscat.grid import (
    GridFunction,
    integral,
    make_grid_function,
    sobolev_norm_sq,
    spectral_derivative,
)
from iscat.hierarchy import h_component, kdv_poly_energy
from iscat.scattering import ScatteringProblem, find_poles
from iscat.energies import (
    BranchCut,
    EnergySpec,
    PoleOnRay,
    QuadratureNotConverged,
    UnsupportedRange,
    _ray_rule,
    _tail_integral,
    _xi_imag_axis,
    _xi_kdv,
    binomial_coeff,
    energy_Es,
    kdv_cubic_term,
    momentum_Ps,
    quartic_term,
    trace_line_side,
    xi_s,
)

from conftest import band_limited, gaussian_amp, sech_amp


@pytest.fixture(scope="module")
def half_gauss(grid) -> GridFunction:
    return gaussian_amp(grid, 0.5)


@pytest.fixture(scope="module")
def tiny_gauss(grid) -> GridFunction:
    return gaussian_amp(grid, 0.05)


@pytest.fixture(scope="module")
def kdv_gauss(grid) -> GridFunction:
    # positive single-bump potential: -d^2/dx^2 + u has no bound states
    return gaussian_amp(grid, 0.3)


@pytest.fixture(scope="module")
def mod_gauss(grid) -> GridFunction:
    return make_grid_function(grid, lambda x: 0.05 * np.exp(1j * x) * np.exp(-(x**2)))


@pytest.fixture(scope="module")
def msech2(grid) -> GridFunction:
    # the classical reflectionless potential with a single eigenvalue at -1/4
    return make_grid_function(grid, lambda x: -2.0 / np.cosh(x) ** 2)


@pytest.fixture(scope="module")
def zero_u(grid) -> GridFunction:
    return make_grid_function(grid, lambda x: 0.0 * x)


@pytest.fixture(scope="module")
def bump(grid) -> GridFunction:
    return make_grid_function(grid, lambda x: 0.75 * np.exp(-(x**2)))


def quadratic_momentum(u: GridFunction, s: float) -> float:
    """-int xi (1+xi^2)^(s-1/2) |u_hat|^2 dxi: the small-data model for P_s."""
    from iscat.grid import to_spectral

    g = u.grid
    dxi = 2.0 * math.pi / g.L
    coeffs = to_spectral(u).coeffs
    return float(
        -dxi * np.sum(g.xi * (1.0 + g.xi**2) ** (s - 0.5) * np.abs(coeffs) ** 2)
    )


class TestRayRule:
    # int_1^inf (t^2-1)^sigma t^(-2j-1) dt = B(j - sigma, sigma + 1) / 2
    @pytest.mark.parametrize(
        "sigma,j",
        [(0.25, 1), (-0.4, 1), (0.7, 2), (1.6, 2), (-0.9, 1), (2.6, 3)],
    )
    def test_rule_plus_tail_hits_beta(self, sigma, j):
        t, w = _ray_rule(sigma, 64.0, 24, 16)
        got = float(np.dot(w, t ** (-2 * j - 1.0))) + _tail_integral(sigma, j, 64.0)
        want = 0.5 * beta_fn(j - sigma, sigma + 1.0)
        assert got == pytest.approx(want, rel=1e-12)

    def test_exponent_override_scaling(self):
        # deliberately mismatched Jacobi exponent: slower rule, same limit
        t, w = _ray_rule(0.25, 64.0, 40, 16, exponent=0.0)
        got = float(np.dot(w, t**-3.0)) + _tail_integral(0.25, 1, 64.0)
        assert got == pytest.approx(0.5 * beta_fn(0.75, 1.25), rel=1e-3)

    def test_tail_at_one_is_the_whole_ray(self):
        assert _tail_integral(0.25, 1, 1.0) == pytest.approx(
            0.5 * beta_fn(0.75, 1.25), rel=1e-13
        )

    @settings(max_examples=40, deadline=None)
    @given(
        sigma=st.floats(-0.9, 2.4),
        j=st.integers(3, 5),
        tau=st.floats(4.0, 32.0),
    )
    def test_tail_positive_decreasing(self, sigma, j, tau):
        full = 0.5 * beta_fn(j - sigma, sigma + 1.0)
        near, far = _tail_integral(sigma, j, tau), _tail_integral(sigma, j, 2 * tau)
        assert 0.0 < far < near <= full * (1 + 1e-12)


class TestXiWeights:
    def test_flat_weight_gives_height(self):
        assert xi_s(0.3 + 0.4j, 0.0) == pytest.approx(0.4, rel=1e-12)

    def test_s1_on_axis_closed_form(self):
        y = 0.5
        assert xi_s(0.5j, 1.0) == pytest.approx(y - y**3 / 3.0, rel=1e-10)

    def test_real_axis_vanishes(self):
        assert xi_s(2.7, 0.6) == 0.0

    def test_continuation_flat_weight(self):
        assert _xi_imag_axis(1.4, 0.0) == pytest.approx(1.4, rel=1e-10)

    def test_continuation_matches_below_cut(self):
        assert _xi_imag_axis(0.8, 0.37) == pytest.approx(xi_s(0.8j, 0.37), rel=1e-9)

    def test_kdv_weight_flat(self):
        assert _xi_kdv(2.0, 0.0) == pytest.approx(8.0 / 3.0, rel=1e-10)

    def test_kdv_weight_s_minus_one(self):
        want = -2.0 + 0.5 * math.log(3.0)
        assert _xi_kdv(2.0, -1.0) == pytest.approx(want, rel=1e-10)

    def test_branch_cut_raises(self):
        with pytest.raises(BranchCut):
            xi_s(1.5j, 0.5)

    def test_lower_half_plane_rejected(self):
        with pytest.raises(ValueError, match="Im z"):
            xi_s(0.3 - 0.1j, 0.5)

    @settings(max_examples=40, deadline=None)
    @given(
        s=st.floats(-0.45, 2.5),
        t1=st.floats(0.05, 0.9),
        dt=st.floats(0.01, 0.09),
    )
    def test_monotone_on_axis_below_cut(self, s, t1, dt):
        a, b = _xi_imag_axis(t1, s), _xi_imag_axis(t1 + dt, s)
        assert 0.0 < a < b


class TestBinomialCoeff:
    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(0, 8), j=st.integers(0, 8))
    def test_integer_consistency(self, n, j):
        assert binomial_coeff(float(n), j) == pytest.approx(math.comb(n, j), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(s=st.floats(-0.4, 2.9), j=st.integers(0, 6))
    def test_matches_scipy(self, s, j):
        assert binomial_coeff(s, j) == pytest.approx(scipy_binom(s, j), abs=1e-12)


class TestIntegerExponents:
    @pytest.mark.parametrize("mode", ["defocusing", "focusing"])
    def test_s0_is_mass(self, half_gauss, mode):
        r = energy_Es(half_gauss, EnergySpec(s=0.0, mode=mode))
        assert r.value == pytest.approx(h_component(0, 2, half_gauss), rel=1e-14)
        assert r.quad_error == 0.0
        assert r.parts["integral"] == 0.0

    @pytest.mark.parametrize("mode", ["defocusing", "focusing"])
    def test_s1_is_mass_plus_energy(self, half_gauss, mode):
        sgn = -1.0 if mode == "focusing" else 1.0
        h0 = h_component(0, 2, half_gauss)
        h2 = h_component(2, 2, half_gauss) + sgn * h_component(2, 4, half_gauss)
        r = energy_Es(half_gauss, EnergySpec(s=1.0, mode=mode))
        assert r.value == pytest.approx(h0 + h2, rel=1e-13)
        assert r.h_values == pytest.approx((h0, h2))

    def test_kdv_s0_is_mass(self, kdv_gauss):
        r = energy_Es(kdv_gauss, EnergySpec(s=0.0, mode="kdv"))
        assert r.value == pytest.approx(kdv_poly_energy(0, kdv_gauss), rel=1e-14)

    def test_kdv_s1_is_sum_of_first_two(self, kdv_gauss):
        want = kdv_poly_energy(0, kdv_gauss) + kdv_poly_energy(1, kdv_gauss)
        r = energy_Es(kdv_gauss, EnergySpec(s=1.0, mode="kdv"))
        assert r.value == pytest.approx(want, rel=1e-13)


class TestQuadraticRegime:
    # eps = 0.05 sits deep in the small-data regime: E_s deviates from the
    # H^s energy only at quartic order, i.e. by ~eps^2 relative.
    @pytest.mark.parametrize("mode", ["defocusing", "focusing"])
    @pytest.mark.parametrize("s", [-0.25, 0.25, 0.75, 1.5, 2.5])
    def test_matches_sobolev_norm(self, tiny_gauss, mode, s):
        r = energy_Es(tiny_gauss, EnergySpec(s=s, mode=mode))
        q = sobolev_norm_sq(tiny_gauss, s)
        assert r.value == pytest.approx(q, rel=5e-3)
        assert r.value > 0.0
        assert r.parts["integral"] + r.parts["binomial"] == pytest.approx(
            r.value, abs=1e-14
        )
        # the error channel is a conservative bound (rule disagreement plus
        # the per-sample noise floor times the weight mass)
        assert math.isfinite(r.quad_error) and r.quad_error < 1e-4

    def test_deviation_is_the_quartic_term(self, grid, tiny_gauss, gaussian):
        # the gap to the H^s energy is a measured eps^4 * quartic_term, not noise
        s, eps = 0.25, 0.05
        r = energy_Es(tiny_gauss, EnergySpec(s=s))
        dev = r.value - sobolev_norm_sq(tiny_gauss, s)
        pred = eps**4 * quartic_term(gaussian, s)
        assert dev == pytest.approx(pred, rel=1e-2)

    def test_deviation_scales_like_eps_squared(self, grid):
        devs = []
        for eps in (0.1, 0.05):
            ue = gaussian_amp(grid, eps)
            q = sobolev_norm_sq(ue, 0.75)
            devs.append(abs(energy_Es(ue, EnergySpec(s=0.75)).value - q) / q)
        slope = math.log(devs[0] / devs[1]) / math.log(2.0)
        assert slope == pytest.approx(2.0, abs=0.3)


class TestFrozenValues:
    # regression anchors measured on the default grid (L=64, N=1024)
    def test_defocusing_fractional(self, half_gauss):
        r = energy_Es(half_gauss, EnergySpec(s=0.7))
        assert r.value == pytest.approx(0.5182569740724822, rel=1e-8)
        assert 0.0 < r.quad_error < 1e-6
        assert len(r.h_values) == 3

    def test_kdv_fractional(self, kdv_gauss):
        r = energy_Es(kdv_gauss, EnergySpec(s=0.5, mode="kdv"))
        assert r.value == pytest.approx(0.17079463272212972, rel=5e-6)


class TestSubtractionOrder:
    def test_energy_value_independent_of_N(self, half_gauss):
        vals = [
            energy_Es(half_gauss, EnergySpec(s=0.7, N=N)).value for N in (0, 1, 2)
        ]
        assert vals[0] == pytest.approx(vals[2], rel=3e-7)
        assert vals[1] == pytest.approx(vals[2], rel=3e-7)

    def test_kdv_value_independent_of_N(self, kdv_gauss):
        vals = [
            energy_Es(kdv_gauss, EnergySpec(s=0.5, mode="kdv", N=N)).value
            for N in (0, 1, 2)
        ]
        assert vals[0] == pytest.approx(vals[2], rel=3e-6)

    def test_kdv_divergent_subtraction_rejected(self, kdv_gauss):
        # N = -1 leaves the 1/tau mass term in a weight growing like tau^(2s+2)
        with pytest.raises(UnsupportedRange, match="diverges"):
            energy_Es(kdv_gauss, EnergySpec(s=0.5, mode="kdv", N=-1))

    def test_kdv_negative_s_defaults_to_mass_only(self, kdv_gauss):
        a = energy_Es(kdv_gauss, EnergySpec(s=-0.5, mode="kdv")).value
        b = energy_Es(kdv_gauss, EnergySpec(s=-0.5, mode="kdv", N=-1)).value
        assert a == b

    def test_momentum_value_independent_of_N(self, mod_gauss):
        vals = [
            momentum_Ps(mod_gauss, EnergySpec(s=0.75, N=N)).value for N in (0, 1, 2)
        ]
        assert vals[0] == pytest.approx(vals[2], abs=1e-6)


class TestTraceIdentities:
    @pytest.mark.parametrize("s", [0.0, 0.25, 0.5])
    def test_defocusing_line_matches_contour(self, half_gauss, s):
        es = energy_Es(half_gauss, EnergySpec(s=s)).value
        tr = trace_line_side(half_gauss, EnergySpec(s=s))
        assert tr == pytest.approx(es, rel=1e-6)

    def test_focusing_with_one_eigenvalue(self, grid):
        # amplitude-A sech has its lone transmission zero at i(A - 1/2)
        uf = sech_amp(grid, 1.2)
        ps = find_poles(
            ScatteringProblem(u=uf, mode="focusing"), (-1.0, 1.0, 0.05, 3.0)
        )
        assert len(ps.poles) == 1
        z, m = ps.poles[0]
        assert m == 1
        assert abs(z - 0.7j) < 1e-6
        h0 = h_component(0, 2, uf)
        tr = trace_line_side(uf, EnergySpec(s=0.0, mode="focusing"), poles=ps)
        assert h0 == pytest.approx(2.88, rel=1e-12)  # 1.44 * int sech^2 = 2.88
        assert tr == pytest.approx(h0, rel=1e-6)

    def test_focusing_zero_on_ray_rejected(self, grid):
        with pytest.raises(PoleOnRay):
            energy_Es(sech_amp(grid, 1.2), EnergySpec(s=0.25, mode="focusing"))

    @pytest.mark.parametrize("s", [0.5, -0.5])
    def test_kdv_line_matches_contour(self, kdv_gauss, s):
        es = energy_Es(kdv_gauss, EnergySpec(s=s, mode="kdv")).value
        tr = trace_line_side(kdv_gauss, EnergySpec(s=s, mode="kdv"))
        assert tr == pytest.approx(es, rel=2e-6)


class TestReflectionlessWell:
    def test_closed_form_at_s_minus_one(self, msech2):
        r = energy_Es(msech2, EnergySpec(s=-1.0, mode="kdv"))
        assert r.value == pytest.approx(math.log(3.0) - 4.0, rel=1e-6)

    def test_fractional_s_rejected_by_ray_screen(self, msech2):
        with pytest.raises(PoleOnRay):
            energy_Es(msech2, EnergySpec(s=0.5, mode="kdv"))

    def test_trace_is_pure_eigenvalue_part(self, msech2):
        # |T| = 1 on the line, so the s=0 trace is 2 * int_0^2 zeta^2 dzeta = 16/3
        tr = trace_line_side(
            msech2, EnergySpec(s=0.0, mode="kdv", quad_tol=1e-4), poles=((1j, 1),)
        )
        assert tr == pytest.approx(16.0 / 3.0, rel=1e-8)


class TestQuarticTerm:
    def test_s1_collapses_to_l4(self, grid):
        uq = gaussian_amp(grid, 0.75)
        want = float(
            integral(
                make_grid_function(grid, lambda x: 0.75**4 * np.exp(-4.0 * x * x))
            ).real
        )
        assert quartic_term(uq, 1.0) == pytest.approx(want, rel=1e-10)

    def test_frozen_value(self, grid):
        uq = gaussian_amp(grid, 0.75)
        assert quartic_term(uq, 0.5) == pytest.approx(0.08427104793198206, rel=1e-10)

    def test_richardson_against_full_energy(self, grid):
        uq = gaussian_amp(grid, 0.75)
        eps = 0.05
        ue = gaussian_amp(grid, 0.75 * eps)
        r = energy_Es(ue, EnergySpec(s=0.5))
        f_num = (r.value - sobolev_norm_sq(ue, 0.5)) / eps**4
        assert f_num == pytest.approx(quartic_term(uq, 0.5), rel=0.1)

    def test_needs_s_above_minus_half(self, half_gauss):
        with pytest.raises(ValueError, match="quartic"):
            quartic_term(half_gauss, -0.5)

    @settings(max_examples=15, deadline=None)
    @given(
        c=st.floats(0.1, 2.0),
        a=st.complex_numbers(max_magnitude=1.0),
        b=st.complex_numbers(max_magnitude=1.0),
    )
    def test_quartic_homogeneity(self, grid, c, a, b):
        u = band_limited(grid, [(3, 0.2 + a), (-7, b), (11, 0.1j)])
        scaled = GridFunction(u.grid, c * u.values)
        assert quartic_term(scaled, 0.6) == pytest.approx(
            c**4 * quartic_term(u, 0.6), rel=1e-11
        )

    @settings(max_examples=15, deadline=None)
    @given(a=st.complex_numbers(max_magnitude=1.0), k=st.integers(-20, 20))
    def test_s1_collapse_on_bands(self, grid, a, k):
        u = band_limited(grid, [(2, 0.3), (k, a), (-5, 0.4j)])
        l4 = float(integral(GridFunction(grid, np.abs(u.values) ** 4)).real)
        assert quartic_term(u, 1.0) == pytest.approx(l4, rel=1e-10, abs=1e-12)


class TestKdvCubicTerm:
    def test_s1_collapses_to_cube(self, grid, bump):
        want = 2.0 * float(integral(GridFunction(grid, bump.values.real**3)).real)
        assert kdv_cubic_term(bump, 1.0) == pytest.approx(want, rel=1e-10)

    def test_frozen_value(self, bump):
        assert kdv_cubic_term(bump, 0.5) == pytest.approx(
            0.29970414598939127, rel=1e-10
        )

    def test_richardson_against_full_energy(self, grid, bump):
        eps = 0.1
        e1 = energy_Es(
            GridFunction(grid, eps * bump.values), EnergySpec(s=0.5, mode="kdv")
        ).value
        e2 = energy_Es(
            GridFunction(grid, 0.5 * eps * bump.values), EnergySpec(s=0.5, mode="kdv")
        ).value
        c_num = 2.0 * (e1 - 4.0 * e2) / eps**3
        assert c_num == pytest.approx(kdv_cubic_term(bump, 0.5), rel=0.15)

    @settings(max_examples=15, deadline=None)
    @given(c=st.floats(0.1, 2.0), a=st.floats(-1.0, 1.0))
    def test_cubic_homogeneity(self, grid, c, a):
        u = make_grid_function(
            grid, lambda x: 0.3 * np.cos(grid.xi[3] * x) + a * np.cos(grid.xi[8] * x)
        )
        scaled = GridFunction(u.grid, c * u.values)
        assert kdv_cubic_term(scaled, 0.6) == pytest.approx(
            c**3 * kdv_cubic_term(u, 0.6), rel=1e-11, abs=1e-13
        )


class TestMomentum:
    def test_half_is_the_exact_momentum(self, grid, mod_gauss):
        ux = spectral_derivative(mod_gauss, 1)
        ip = float(
            np.real(
                integral(GridFunction(grid, np.conj(mod_gauss.values) * 1j * ux.values))
            )
        )
        r = momentum_Ps(mod_gauss, EnergySpec(s=0.5))
        assert r.value == pytest.approx(h_component(1, 2, mod_gauss), rel=1e-14)
        assert r.value == pytest.approx(ip, rel=1e-13)
        assert r.quad_error == 0.0

    @pytest.mark.parametrize("mode", ["defocusing", "focusing"])
    def test_three_halves_composition(self, mod_gauss, mode):
        sgn = -1.0 if mode == "focusing" else 1.0
        h1 = h_component(1, 2, mod_gauss)
        h3 = h_component(3, 2, mod_gauss) + sgn * h_component(3, 4, mod_gauss)
        r = momentum_Ps(mod_gauss, EnergySpec(s=1.5, mode=mode))
        assert r.value == pytest.approx(h1 + h3, rel=1e-13)

    @pytest.mark.parametrize(
        "mode,s",
        [
            ("defocusing", 0.25),
            ("defocusing", 0.75),
            ("defocusing", 2.2),
            ("focusing", 0.75),
            ("focusing", 2.2),
        ],
    )
    def test_small_data_quadratic_model(self, mod_gauss, mode, s):
        r = momentum_Ps(mod_gauss, EnergySpec(s=s, mode=mode))
        assert r.value == pytest.approx(quadratic_momentum(mod_gauss, s), rel=5e-3)

    def test_real_even_data_vanishes(self, grid):
        r = momentum_Ps(gaussian_amp(grid, 0.4), EnergySpec(s=0.75))
        assert r.value == pytest.approx(0.0, abs=1e-9)

    def test_kdv_mode_rejected(self, kdv_gauss):
        with pytest.raises(UnsupportedRange, match="NLS"):
            momentum_Ps(kdv_gauss, EnergySpec(s=0.75, mode="kdv"))

    def test_upper_range_rejected(self, mod_gauss):
        with pytest.raises(UnsupportedRange):
            momentum_Ps(mod_gauss, EnergySpec(s=2.5))


class TestZeroData:
    def test_everything_is_exactly_zero(self, zero_u):
        assert energy_Es(zero_u, EnergySpec(s=0.7)).value == 0.0
        assert energy_Es(zero_u, EnergySpec(s=0.5, mode="kdv")).value == 0.0
        assert momentum_Ps(zero_u, EnergySpec(s=0.7)).value == 0.0
        assert trace_line_side(zero_u, EnergySpec(s=0.7)) == 0.0
        assert quartic_term(zero_u, 0.7) == 0.0
        assert kdv_cubic_term(zero_u, 0.7) == 0.0


class TestValidation:
    def test_nls_lower_bound_at_construction(self):
        with pytest.raises(UnsupportedRange):
            EnergySpec(s=-0.6)

    def test_kdv_lower_bound_at_construction(self):
        with pytest.raises(UnsupportedRange):
            EnergySpec(s=-1.5, mode="kdv")

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            EnergySpec(s=0.5, mode="sharpening")

    def test_short_ray_rejected(self):
        with pytest.raises(ValueError, match="tau_max"):
            EnergySpec(s=0.5, tau_max=2.0)

    def test_upper_bound_at_evaluation(self, half_gauss):
        with pytest.raises(UnsupportedRange):
            energy_Es(half_gauss, EnergySpec(s=3.2))

    def test_subtraction_beyond_tower(self, half_gauss):
        with pytest.raises(UnsupportedRange, match="tower"):
            energy_Es(half_gauss, EnergySpec(s=0.7, N=3))

    def test_starved_quadrature_raises(self, half_gauss):
        with pytest.raises(QuadratureNotConverged):
            energy_Es(
                half_gauss,
                EnergySpec(s=0.7, jacobi_nodes=4, panel_nodes=4, quad_tol=1e-14),
            )
