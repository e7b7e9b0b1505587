import numpy as np
import pytest

from bsqlab.errors import ConfigurationError, GridMismatchError
from bsqlab.spectral import (
    ComplexField,
    RealField,
    abs_dx_multiplier,
    apply_multiplier,
    bracket_power_multiplier,
    dealias_and_mean,
    derivative_multiplier,
    direction_multiplier,
    hermitian_defect,
    integrate,
    l2_norm,
    linf_norm,
    make_grid,
    multiplier_from_symbol,
    norm,
    random_real_field,
    real_field,
    sobolev_norm,
    transform,
    wkinf_norm,
)


class TestGrid:
    def test_integer_modes_on_pi_box(self):
        g = make_grid(16, np.pi)
        assert g.dx == pytest.approx(2 * np.pi / 16)
        assert np.array_equal(g.xi, np.arange(-8, 8, dtype=float))

    def test_mode_spacing(self):
        g = make_grid(32, 16 * np.pi)
        assert g.dxi == pytest.approx(1.0 / 16.0)
        assert g.xi[g.index_of_mode_zero() + 1] == pytest.approx(1.0 / 16.0)

    @pytest.mark.parametrize("n", [10, 24, 8, 0])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ConfigurationError):
            make_grid(n, 1.0)

    def test_rejects_bad_length(self):
        with pytest.raises(ConfigurationError):
            make_grid(64, -1.0)

    def test_zero_mode_present_once(self, pi_grid):
        assert np.count_nonzero(pi_grid.xi == 0.0) == 1


class TestTransform:
    def test_constant_field_is_pure_mean(self, pi_grid):
        u = real_field(pi_grid, np.ones(pi_grid.n))
        c = u.spectrum
        nz = np.flatnonzero(np.abs(c) > 1e-12)
        assert list(nz) == [pi_grid.index_of_mode_zero()]
        # continuum convention: u_hat(0) = integral of u = 2L
        assert c[nz[0]] == pytest.approx(2 * np.pi)

    def test_cosine_two_symmetric_coefficients(self, pi_grid):
        u = real_field(pi_grid, np.cos(pi_grid.x))
        c = u.spectrum
        nz = np.flatnonzero(np.abs(c) > 1e-10)
        assert sorted(pi_grid.xi[nz]) == [-1.0, 1.0]
        assert np.allclose(c[nz], np.pi)

    def test_roundtrip_random_fields(self, pi_grid, rng):
        worst = 0.0
        for _ in range(1000):
            u = rng.standard_normal(pi_grid.n)
            back = pi_grid.inverse(pi_grid.forward(u)).real
            worst = max(worst, np.max(np.abs(back - u)) / np.max(np.abs(u)))
        assert worst <= 1e-13

    def test_transform_api_roundtrip(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng)
        back = transform(transform(u, "forward"), "inverse")
        assert np.allclose(back.samples, u.samples, atol=1e-14)

    def test_inverse_rejects_non_hermitian(self, pi_grid):
        c = np.zeros(pi_grid.n, dtype=complex)
        c[pi_grid.index_of_mode_zero() + 1] = 1.0  # no conjugate partner
        with pytest.raises(ValueError):
            transform(ComplexField(pi_grid, c), "inverse")


class TestMultipliers:
    def test_dispersion_annihilates_unit_mode(self, pi_grid):
        lam = multiplier_from_symbol(
            pi_grid, lambda xi: (np.abs(xi) - np.abs(xi) ** 3) + 0j, "lambda"
        )
        u = real_field(pi_grid, np.cos(pi_grid.x))
        out = apply_multiplier(lam, u)
        unit_modes = np.abs(pi_grid.xi) == 1.0
        # lambda(1) = 0 exactly, so the cosine modes are annihilated; the
        # remaining floor is FFT leakage amplified by |lambda| ~ n^3/8
        assert np.max(np.abs(out.spectrum[unit_modes])) <= 1e-14 * np.pi
        assert linf_norm(out) <= 1e-11

    def test_direction_squares_to_minus_one(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng)
        A = direction_multiplier(pi_grid)
        twice = apply_multiplier(A, apply_multiplier(A, u))
        assert np.max(np.abs(twice.samples + u.samples)) <= 1e-13

    def test_bracket_squared_on_cosine(self, pi_grid):
        u = real_field(pi_grid, np.cos(pi_grid.x))
        out = apply_multiplier(bracket_power_multiplier(pi_grid, 2.0), u)
        assert np.allclose(out.samples, 2.0 * np.cos(pi_grid.x), atol=1e-12)

    def test_grid_mismatch_rejected(self, pi_grid, rng):
        other = make_grid(32, np.pi)
        u = random_real_field(other, rng)
        with pytest.raises(GridMismatchError):
            apply_multiplier(direction_multiplier(pi_grid), u)

    def test_real_symbol_preserves_hermitian_symmetry(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng)
        for m in (abs_dx_multiplier(pi_grid), bracket_power_multiplier(pi_grid, -1.5)):
            out = apply_multiplier(m, u)
            assert isinstance(out, RealField)
            assert hermitian_defect(pi_grid, out.spectrum) <= 1e-13 * linf_norm(u)

    def test_derivative_multiplier_is_odd_imaginary(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng)
        out = apply_multiplier(derivative_multiplier(pi_grid), u)
        assert isinstance(out, RealField)


class TestNorms:
    def test_zero_field(self, pi_grid):
        u = real_field(pi_grid, np.zeros(pi_grid.n))
        for kind, order in [("sobolev", 2), ("l2", None), ("linf", None), ("wkinf", 1)]:
            assert norm(u, kind, order) == 0.0

    def test_cosine_sobolev_against_quadrature_oracle(self, pi_grid):
        u = real_field(pi_grid, np.cos(pi_grid.x))
        # oracle: physical quadrature of cos^2 over [-pi, pi) = pi
        quad = integrate(real_field(pi_grid, u.samples**2))
        assert quad == pytest.approx(np.pi, rel=1e-14)
        assert sobolev_norm(u, 0.0) == pytest.approx(np.sqrt(np.pi), rel=1e-13)
        assert sobolev_norm(u, 1.0) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-13)

    def test_cosine_w1inf(self, pi_grid):
        u = real_field(pi_grid, np.cos(pi_grid.x))
        assert wkinf_norm(u, 1) == pytest.approx(2.0, abs=1e-12)

    def test_parseval_on_random_band_limited(self, pi_grid, rng):
        for _ in range(50):
            u = random_real_field(pi_grid, rng)
            quad = integrate(real_field(pi_grid, u.samples**2))
            assert sobolev_norm(u, 0.0) ** 2 == pytest.approx(quad, rel=1e-12)

    def test_sobolev_rejects_low_index(self, pi_grid, rng):
        with pytest.raises(ConfigurationError):
            sobolev_norm(random_real_field(pi_grid, rng), -3.0)


class TestDealias:
    def test_below_cutoff_unchanged(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng)  # already band-limited
        out = dealias_and_mean(u)
        assert np.allclose(out.samples, u.samples, atol=1e-15)

    def test_nyquist_mode_removed(self, pi_grid):
        c = np.zeros(pi_grid.n, dtype=complex)
        c[0] = 1.0  # the unpaired Nyquist entry
        out = dealias_and_mean(ComplexField(pi_grid, c))
        assert np.all(out.coefficients == 0)

    def test_constant_with_mean_enforcement(self, pi_grid):
        u = real_field(pi_grid, np.full(pi_grid.n, 3.0))
        out = dealias_and_mean(u, enforce_zero_mean=True)
        assert out.zero_mean
        assert linf_norm(out) <= 1e-15

    def test_random_field_generator_contract(self, pi_grid, rng):
        u = random_real_field(pi_grid, rng, amplitude=0.7)
        assert u.zero_mean
        assert linf_norm(u) == pytest.approx(0.7, rel=1e-12)
        c = u.spectrum
        assert abs(c[pi_grid.index_of_mode_zero()]) <= 1e-14 * np.max(np.abs(c))
        assert np.all(np.abs(c[~pi_grid.dealias_keep]) <= 1e-13)
