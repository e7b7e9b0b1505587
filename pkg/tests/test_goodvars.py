import numpy as np
import pytest

from bsqlab.cutoffs import phi_geq, phi_leq, paraproduct_weight
from bsqlab.errors import ConfigurationError, ContractionError
from bsqlab.goodvars import (
    SymbolKernel,
    ansatz_threshold,
    assemble_symmetrized_rhs,
    b_bilinear,
    bilinear_apply,
    conj_reflect,
    decomposition_residual,
    energy_functional,
    good_forward,
    good_inverse,
    make_profile_pair,
    make_state,
    measured_b_constant,
    profile_shift,
    profile_time_derivative_bound,
    random_state,
    symbol_eval,
    symbol_kernel,
    symmetrized_terms,
    time_derivative_V,
)
from bsqlab.phases import PhaseSpec, UNIT, eps_model, lambda_dispersion, phase_direct
from bsqlab.spectral import (
    ComplexField,
    apply_multiplier,
    dealias_spectrum,
    derivative_multiplier,
    l2_norm,
    linf_norm,
    make_grid,
    random_real_field,
    real_field,
    sobolev_norm,
    transform,
)

EPS = eps_model(0.1)


def zero_state(grid, model=UNIT):
    z = real_field(grid, np.zeros(grid.n), zero_mean=True)
    return make_state(z, z, model)


class TestBilinearB:
    def test_low_frequency_input_is_annihilated(self, band_grid, rng):
        f = random_real_field(band_grid, rng)
        g = random_real_field(band_grid, rng, band_fraction=0.15)  # |xi| < 25.6
        assert linf_norm(b_bilinear(f, g)) <= 1e-14

    def test_reality_symmetry(self, band_grid, rng):
        for model in (UNIT, EPS):
            for _ in range(20):
                f = random_real_field(band_grid, rng, decay=1.0)
                g = random_real_field(band_grid, rng, decay=1.0)
                c = b_bilinear(f, g, model).spectrum
                scale = max(np.max(np.abs(c)), 1e-300)
                defect = np.max(np.abs(c[1:][::-1] - np.conj(c[1:]))) / scale
                assert defect <= 1e-13

    def test_output_is_high_frequency(self, band_grid, rng):
        f = random_real_field(band_grid, rng, decay=1.0)
        g = random_real_field(band_grid, rng, decay=1.0)
        c = b_bilinear(f, g).spectrum
        low = np.abs(band_grid.xi) < 30.0
        assert np.max(np.abs(c[low])) <= 1e-16 * max(np.max(np.abs(c)), 1e-300)

    def test_smoothing_bound_has_stable_constant(self, band_grid, rng):
        reference = measured_b_constant(band_grid)
        worst = 0.0
        for _ in range(60):
            f = random_real_field(band_grid, rng, amplitude=1.0, decay=1.0)
            g = random_real_field(band_grid, rng, amplitude=1.0, decay=1.0)
            b = b_bilinear(f, g)
            for s in (-2.0, 0.0, 2.0):
                worst = max(worst, sobolev_norm(b, s + 2) / (linf_norm(f) * sobolev_norm(g, s)))
        assert np.isfinite(worst)
        assert worst <= 2.0 * reference

    def test_rejects_nonzero_mean(self, band_grid, rng):
        f = random_real_field(band_grid, rng)
        bad = real_field(band_grid, f.samples + 1.0)
        with pytest.raises(ConfigurationError):
            b_bilinear(bad, f)


class TestGoodUnknowns:
    def test_zero_elevation_means_identity(self, band_grid, rng):
        v = random_real_field(band_grid, rng, amplitude=0.05)
        z = real_field(band_grid, np.zeros(band_grid.n), zero_mean=True)
        good = good_forward(make_state(z, v))
        assert np.allclose(good.u.samples, v.samples, atol=1e-14)
        # V = i (dx/|dx|) v has spectrum -sign(xi) v_hat
        expected = -np.sign(band_grid.xi) * v.spectrum
        assert np.allclose(good.V.coefficients, expected, atol=1e-13)

    def test_zero_velocity(self, band_grid, rng):
        z = random_real_field(band_grid, rng, amplitude=0.05)
        zero = real_field(band_grid, np.zeros(band_grid.n), zero_mean=True)
        good = good_forward(make_state(z, zero))
        assert linf_norm(good.u) <= 1e-15
        assert np.allclose(good.V.coefficients, z.spectrum, atol=1e-14)

    @pytest.mark.parametrize("model", [UNIT, EPS])
    def test_inverse_roundtrip(self, band_grid, rng, model):
        state = random_state(band_grid, rng, model, amplitude=0.05, decay=1.0)
        good = good_forward(state)
        recovered = good_inverse(state.zeta, good.u, model)
        rel = l2_norm(real_field(band_grid, recovered.samples - state.v.samples))
        assert rel <= 1e-11 * max(l2_norm(state.v), 1e-300)

    def test_non_contracting_inversion_raises(self, band_grid, rng):
        threshold = ansatz_threshold(band_grid)
        amplitude = 4.0 * threshold
        z = random_real_field(band_grid, rng, amplitude=amplitude, decay=1.0)
        u = random_real_field(band_grid, rng, amplitude=amplitude, decay=1.0)
        with pytest.raises(ContractionError) as info:
            good_inverse(z, u)
        assert info.value.contraction_factor >= 1.0


class TestProfiles:
    def test_zero_time_is_identity(self, band_grid, rng):
        V = transform(random_real_field(band_grid, rng))
        out = profile_shift(V, 0.0)
        assert np.array_equal(out.coefficients, V.coefficients)

    def test_roundtrip(self, band_grid, rng):
        V = transform(random_real_field(band_grid, rng))
        back = profile_shift(profile_shift(V, 2.3, EPS, "to_profile"), 2.3, EPS, "from_profile")
        assert np.max(np.abs(back.coefficients - V.coefficients)) <= 1e-13

    def test_sobolev_isometry_and_weighting(self, band_grid, rng):
        state = random_state(band_grid, rng, amplitude=0.05)
        V = good_forward(state).V
        pair = make_profile_pair(V, 1.7, UNIT, n0=4)
        assert sobolev_norm(pair.f, 4) == pytest.approx(sobolev_norm(V, 4), rel=1e-13)
        weights = (1.0 + band_grid.xi**2) ** 2.0
        assert np.array_equal(pair.g.coefficients, weights * pair.f.coefficients)


class TestSymbols:
    def test_q_plus_vanishes(self, rng):
        xi = rng.uniform(-50, 50, 200)
        eta = rng.uniform(-50, 50, 200)
        for mu in (1, -1):
            assert np.all(symbol_eval("q", mu, 1, xi, eta) == 0.0)

    def test_s_spot_value(self):
        assert symbol_eval("s", 1, 1, 1.001, 1.0) == pytest.approx(0.75075j)

    def test_s_is_anti_hermitian(self, rng):
        xi = rng.uniform(-60, 60, 500)
        eta = rng.uniform(-60, 60, 500)
        for mu in (1, -1):
            s = symbol_eval("s", mu, 1, xi, eta)
            assert np.max(np.abs(np.conj(s) + s)) == 0.0

    def test_weighted_s_cancellation_bound(self, rng):
        # |s_tilde| <= K |xi - eta| on its support, K finite (recorded)
        eta = rng.uniform(0.5, 100, 20000) * rng.choice([-1, 1], 20000)
        xi = eta + rng.uniform(-1, 1, 20000) * 2.0 ** (-5) * np.abs(eta)
        for n0 in (4, 6):
            st = symbol_eval("s_tilde", 1, 1, xi, eta, n0=n0)
            gap = np.abs(xi - eta)
            keep = gap > 1e-12
            ratio = np.abs(st[keep]) / gap[keep]
            assert np.all(np.isfinite(ratio))
            assert np.max(ratio) <= 50.0 * n0

    def test_q_tilde_support(self, rng):
        xi = rng.uniform(-300, 300, 20000)
        eta = rng.uniform(-300, 300, 20000)
        qt = symbol_eval("q_tilde", 1, -1, xi, eta)
        mask = phi_leq(5, np.abs(eta)) * phi_leq(-6, np.abs(xi - eta) / np.maximum(np.abs(eta), 1e-300))
        assert np.all(np.abs(qt[mask == 0.0]) == 0.0)

    def test_r_support_and_bound(self, rng):
        eta = rng.uniform(0.5, 300, 20000) * rng.choice([-1, 1], 20000)
        xi = eta + rng.uniform(-1, 1, 20000) * np.abs(eta)
        r = symbol_eval("r", 1, -1, xi, eta)
        outside = phi_geq(6, np.abs(eta)) == 0.0
        assert np.all(np.abs(r[outside]) == 0.0)
        inside = (np.abs(r) > 0) & (np.abs(xi - eta) > 1e-12)
        ratio = np.abs(r[inside]) / np.abs((xi - eta)[inside])
        assert np.all(np.isfinite(ratio))

    def test_m_support(self, rng):
        eta = rng.uniform(0.5, 100, 20000) * rng.choice([-1, 1], 20000)
        xi = rng.uniform(-400, 400, 20000)
        m = symbol_eval("m", 1, -1, xi, eta)
        inside = np.abs(m) > 0
        ratio = np.abs((xi - eta)[inside]) / np.abs(eta[inside])
        assert np.all(ratio >= 2.0 ** (-7))
        assert np.all(ratio <= 2.0**8)

    def test_normal_form_symbol_masked_and_exact(self, rng):
        D = 6
        xi = rng.uniform(-5, 5, 5000)
        eta = rng.uniform(-5, 5, 5000)
        for mu, nu in [(1, 1), (1, -1)]:
            a = symbol_eval("a", mu, nu, xi, eta, D=D)
            phase = phase_direct(PhaseSpec(mu, nu), xi, eta)
            bad = np.abs(phase) < max(2.0**-D, 1e-8)
            assert np.all(a[bad] == 0.0)
            good = ~bad
            q = symbol_eval("q_heuristic", mu, nu, xi[good], eta[good])
            np.testing.assert_allclose(a[good], -q / (1j * phase[good]), rtol=1e-12)

    def test_normal_form_requires_cutoff(self):
        with pytest.raises(ConfigurationError):
            symbol_eval("a", 1, 1, 1.0, 2.0)

    def test_eps_symbols_scale(self, rng):
        xi = rng.uniform(-60, 60, 300)
        eta = rng.uniform(-60, 60, 300)
        s_unit = symbol_eval("s", 1, 1, xi, eta, model=UNIT)
        s_eps = symbol_eval("s", 1, 1, xi, eta, model=eps_model(0.25))
        np.testing.assert_allclose(s_eps, 0.25 * s_unit, atol=1e-15)


class TestBilinearApply:
    def test_unit_kernel_is_dealiased_product(self, band_grid, rng):
        f = random_real_field(band_grid, rng)
        g = random_real_field(band_grid, rng)
        one = SymbolKernel(lambda xi, eta, js=None: np.ones(np.broadcast(xi, eta).shape, complex), "")
        out = bilinear_apply(one, transform(f), transform(g))
        product = dealias_spectrum(band_grid, band_grid.forward(f.samples * g.samples))
        assert np.linalg.norm(out.coefficients - product) <= 1e-12 * np.linalg.norm(product)

    def test_derivative_kernel_matches_transform_route(self, band_grid, rng):
        f = random_real_field(band_grid, rng)
        g = random_real_field(band_grid, rng)
        ker = SymbolKernel(lambda xi, eta, js=None: 1j * (xi + 0.0 * eta), "")
        out = bilinear_apply(ker, transform(f), transform(g))
        product = real_field(band_grid, f.samples * g.samples)
        oracle = dealias_spectrum(
            band_grid, apply_multiplier(derivative_multiplier(band_grid), product).spectrum
        )
        assert np.linalg.norm(out.coefficients - oracle) <= 1e-12 * max(
            np.linalg.norm(oracle), 1e-300
        )

    def test_all_false_mask_gives_zero(self, band_grid, rng):
        f = transform(random_real_field(band_grid, rng))
        ker = SymbolKernel(
            lambda xi, eta, js=None: np.ones(np.broadcast(xi, eta).shape, complex),
            "",
            mask=lambda xi, eta: np.zeros(np.broadcast(xi, eta).shape, bool),
        )
        out = bilinear_apply(ker, f, f)
        assert np.all(out.coefficients == 0.0)


class TestDecomposition:
    def test_zero_state_zero_rhs(self, band_grid):
        state = zero_state(band_grid)
        rhs = assemble_symmetrized_rhs(state)
        assert np.all(rhs.coefficients == 0.0)
        assert decomposition_residual(state) == 0.0

    def test_linear_diagonalization_is_exact(self, band_grid, rng):
        # with the nonlinearity dropped, d/dt(zeta + i(dx/|dx|)v) = i*Lambda*V
        z = random_real_field(band_grid, rng, amplitude=0.1)
        v = random_real_field(band_grid, rng, amplitude=0.1)
        xi = band_grid.xi
        sym13 = 1j * xi * (1.0 - xi**2)
        dz = -sym13 * v.spectrum
        dv = -sym13 * z.spectrum
        Vc = z.spectrum - np.sign(xi) * v.spectrum
        dV = dz - np.sign(xi) * dv
        lam = lambda_dispersion(xi)
        assert np.max(np.abs(dV - 1j * lam * Vc)) <= 1e-12 * np.max(np.abs(sym13 * Vc + 1))

    @pytest.mark.parametrize(
        "model,grouping", [(UNIT, "prop31"), (EPS, "prop51")]
    )
    def test_residuals_on_random_states(self, band_grid, rng, model, grouping):
        for _ in range(3):
            state = random_state(band_grid, rng, model, amplitude=0.04, decay=1.5)
            assert decomposition_residual(state, 4, "raw_new_bsq") <= 1e-9
            raw = sum(symmetrized_terms(state, 4, "raw_new_bsq").values())
            grouped = sum(symmetrized_terms(state, 4, grouping).values())
            lam = lambda_dispersion(band_grid.xi, model)
            lhs = (
                time_derivative_V(state).coefficients
                - 1j * lam * good_forward(state).V.coefficients
            )
            agreement = np.linalg.norm(grouped - raw) / np.linalg.norm(lhs)
            assert agreement <= 1e-10

    def test_grouping_validation(self, band_grid, rng):
        state = random_state(band_grid, rng, amplitude=0.02)
        with pytest.raises(ConfigurationError):
            symmetrized_terms(state, 4, "prop51")
        with pytest.raises(ConfigurationError):
            symmetrized_terms(state, 4, "nonsense")

    def test_conj_reflect_matches_conjugate_samples(self, band_grid, rng):
        state = random_state(band_grid, rng, amplitude=0.05)
        V = good_forward(state).V
        reflected = conj_reflect(V.coefficients)
        direct = band_grid.forward(np.conj(V.samples))
        assert np.max(np.abs(reflected - direct)) <= 1e-12 * np.max(np.abs(V.coefficients))


class TestEnergyAndProfiles:
    def test_zero_state_energy(self, band_grid):
        E, ratio = energy_functional(zero_state(band_grid))
        assert E == 0.0 and ratio == 1.0

    def test_low_frequency_velocity_is_isometric(self, band_grid, rng):
        v = random_real_field(band_grid, rng, amplitude=0.05, band_fraction=0.15)
        z = real_field(band_grid, np.zeros(band_grid.n), zero_mean=True)
        E, ratio = energy_functional(make_state(z, v))
        assert ratio == pytest.approx(1.0, abs=1e-12)

    def test_ensemble_ratio_bracket(self, band_grid, rng):
        for _ in range(50):
            state = random_state(band_grid, rng, amplitude=0.05, decay=1.0)
            _, ratio = energy_functional(state)
            assert 0.25 <= ratio <= 4.0

    def test_profile_bound_zero_state(self, band_grid):
        assert profile_time_derivative_bound(zero_state(band_grid)) == 0.0

    def test_profile_bound_quadratic_smallness_unit(self, band_grid, rng):
        # unit model, data of size eps: the weighted derivative is O(eps^2)
        ratios = []
        for eps in (0.05, 0.025):
            vals = []
            for _ in range(5):
                state = random_state(band_grid, rng, UNIT, amplitude=eps)
                from bsqlab.evolution import scale_to_energy

                state = scale_to_energy(state, eps, 4)
                vals.append(profile_time_derivative_bound(state, 0.0, 4) / eps**2)
            ratios.append(np.mean(vals))
        assert all(np.isfinite(r) for r in ratios)
        # the eps^-2 normalization keeps the values of the same order
        assert max(ratios) <= 4.0 * min(ratios)

    def test_profile_bound_linear_smallness_eps(self, band_grid, rng):
        ratios = []
        for eps in (0.05, 0.025):
            state = random_state(band_grid, rng, eps_model(eps), amplitude=0.3)
            from bsqlab.evolution import scale_to_energy

            state = scale_to_energy(state, 1.0, 4)
            ratios.append(profile_time_derivative_bound(state, 0.0, 4) / eps)
        assert max(ratios) <= 6.0 * min(ratios)

    def test_profile_bound_time_invariance(self, band_grid, rng):
        state = random_state(band_grid, rng, amplitude=0.05)
        a = profile_time_derivative_bound(state, 0.0)
        b = profile_time_derivative_bound(state, 3.7)
        assert a == pytest.approx(b, rel=1e-12)
