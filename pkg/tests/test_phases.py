import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bsqlab.errors import ConfigurationError, DomainError
from bsqlab.phases import (
    PhaseSpec,
    RatioRegion,
    UNIT,
    abcd_eigenvalues,
    cutoff_D,
    eps_model,
    jacobian_psi,
    lambda_dispersion,
    modulation_branch_mask,
    modulation_phase_spec,
    modulation_prefactor,
    modulation_value,
    phase_closed,
    phase_direct,
    region_s_eps_gt_plus,
    region_s_gt,
    region_s_plus,
    small_modulation_measure,
    wellposed_predicate,
)

ALL_PAIRS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


class TestDispersion:
    def test_unit_values(self):
        assert lambda_dispersion(1.0) == 0.0
        assert lambda_dispersion(2.0) == -6.0
        assert lambda_dispersion(-2.0) == -6.0

    def test_eps_root(self):
        assert lambda_dispersion(2.0, eps_model(0.25)) == pytest.approx(0.0, abs=1e-15)

    def test_model_validation(self):
        with pytest.raises(ConfigurationError):
            eps_model(1.5)
        with pytest.raises(ConfigurationError):
            eps_model(0.0)


class TestAbcdFamily:
    def test_strongly_dispersive_case(self):
        # a = c = 1, b = d = 0: direct substitution gives +-i*2*3
        lam_p, lam_m = abcd_eigenvalues(1, 0, 1, 0, eps=1.0, xi=2.0)
        assert lam_p == pytest.approx(6j)
        assert lam_m == pytest.approx(-6j)

    def test_wellposed_exceptional_case(self):
        assert wellposed_predicate(1, 0, 1, 0)

    def test_illposed_generic_positive_case(self):
        assert not wellposed_predicate(1, 0, 2, 0)

    def test_standard_dissipative_quadrant(self):
        assert wellposed_predicate(-1, 2, -0.5, 0)

    def test_denominator_zero_raises(self):
        # 1 + eps*d*xi^2 = 0 at d = -1, eps = 1, xi = 1
        with pytest.raises(DomainError):
            abcd_eigenvalues(1, 0, 1, -1, eps=1.0, xi=1.0)


class TestPhaseValues:
    def test_aligned_product_form(self):
        assert phase_direct(PhaseSpec(1, 1), 3.0, 1.0) == pytest.approx(18.0)

    def test_opposite_sign_value(self):
        assert phase_direct(PhaseSpec(1, 1), 1.0, 2.0) == pytest.approx(-6.0)

    def test_minus_minus_value(self):
        assert phase_direct(PhaseSpec(-1, -1), 2.0, 1.0) == pytest.approx(6.0)

    def test_closed_matches_on_examples(self):
        assert phase_closed(PhaseSpec(1, 1), 3.0, 1.0) == pytest.approx(18.0)
        assert phase_closed(PhaseSpec(1, 1), 1.0, 2.0) == pytest.approx(-6.0)
        assert phase_closed(PhaseSpec(-1, 1), 1.0, 3.0) == pytest.approx(-18.0)

    @pytest.mark.parametrize("mu,nu", ALL_PAIRS)
    @pytest.mark.parametrize("model", [UNIT, eps_model(1.0), eps_model(0.25), eps_model(0.01)])
    def test_closed_equals_direct_on_grid(self, mu, nu, model):
        xs = np.linspace(-10.0, 10.0, 401)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        keep = (X != 0) & (Y != 0) & (X != Y)
        spec = PhaseSpec(mu, nu, model)
        err = np.abs(phase_closed(spec, X, Y) - phase_direct(spec, X, Y))
        bound = 1e-12 * (1.0 + np.abs(X) ** 3 + np.abs(Y) ** 3)
        assert np.all(err[keep] <= bound[keep])

    @given(
        st.floats(-50, 50), st.floats(-50, 50),
        st.sampled_from(ALL_PAIRS),
        st.sampled_from([1.0, 0.3, 0.05]),
    )
    @settings(max_examples=300, deadline=None)
    def test_closed_equals_direct_random(self, xi, eta, pair, eps):
        assume(xi != 0 and eta != 0 and xi != eta)
        spec = PhaseSpec(*pair, eps_model(eps))
        lhs = phase_closed(spec, xi, eta)
        rhs = phase_direct(spec, xi, eta)
        assert abs(lhs - rhs) <= 1e-11 * (1.0 + abs(xi) ** 3 + abs(eta) ** 3)

    def test_degenerate_points_fall_back_to_direct(self):
        for spec in (PhaseSpec(1, 1), PhaseSpec(1, -1, eps_model(0.5))):
            for xi, eta in [(0.0, 2.0), (2.0, 0.0), (1.3, 1.3)]:
                assert phase_closed(spec, xi, eta) == phase_direct(spec, xi, eta)


class TestSymmetries:
    def test_unit_relations(self, rng):
        x = rng.uniform(-9, 9, 4000)
        y = rng.uniform(-9, 9, 4000)
        pp = PhaseSpec(1, 1)
        assert np.max(np.abs(
            phase_closed(PhaseSpec(-1, 1), x, y) + phase_closed(pp, y, x)
        )) <= 1e-13 * np.max(1 + np.abs(x) ** 3 + np.abs(y) ** 3)
        assert np.max(np.abs(
            phase_closed(PhaseSpec(1, -1), x, y) + phase_closed(pp, y - x, y)
        )) <= 1e-13 * np.max(1 + np.abs(x) ** 3 + np.abs(y) ** 3)

    def test_eps_relations(self, rng):
        m = eps_model(0.25)
        x = rng.uniform(-9, 9, 4000)
        y = rng.uniform(-9, 9, 4000)
        scale = np.max(1 + np.abs(x) ** 3 + np.abs(y) ** 3)
        pm = PhaseSpec(1, -1, m)
        assert np.max(np.abs(
            phase_closed(pm, x, y) - phase_closed(pm, y, x)
        )) <= 1e-13 * scale
        assert np.max(np.abs(
            phase_closed(PhaseSpec(1, 1, m), x, y) + phase_closed(pm, y - x, y)
        )) <= 1e-13 * scale
        assert np.max(np.abs(
            phase_closed(PhaseSpec(-1, 1, m), x, y) - phase_closed(pm, x - y, x)
        )) <= 1e-13 * scale

    def test_minus_minus_swap_defect_is_twice_dispersion(self, rng):
        # the loose swap relation between the (-,-) and (+,-) phases is
        # not a pointwise identity; its exact defect is -2*lambda(xi-eta)
        m = eps_model(0.25)
        x = rng.uniform(-9, 9, 2000)
        y = rng.uniform(-9, 9, 2000)
        lhs = phase_direct(PhaseSpec(-1, -1, m), x, y)
        rhs = phase_direct(PhaseSpec(1, -1, m), y, x)
        defect = lhs - rhs
        expected = -2.0 * lambda_dispersion(x - y, m)
        assert np.max(np.abs(defect - expected)) <= 1e-12 * np.max(1 + np.abs(defect))


class TestModulations:
    def test_diagonal_root(self):
        xi = np.sqrt(2.0 / 3.0)
        assert modulation_value("pp_opposite", xi, xi) == pytest.approx(0.0, abs=1e-15)
        assert modulation_value("pp_opposite", 1.0, 1.0) == pytest.approx(0.5)

    def test_pp_factorization_example(self):
        val = modulation_value("pp_opposite", 1.0, 2.0)
        assert val == pytest.approx(3.0)
        assert -2.0 * abs(1.0 - 2.0) * val == pytest.approx(
            phase_direct(PhaseSpec(1, 1), 1.0, 2.0)
        )

    def test_eps_limit_is_minus_four(self):
        xs = np.linspace(-5, 5, 41)
        X, Y = np.meshgrid(xs, xs)
        vals = modulation_value("pm_aligned_eps", X, Y, eps=1e-12)
        assert np.max(np.abs(vals + 4.0)) <= 1e-9

    @pytest.mark.parametrize(
        "tag,eps",
        [("pp_opposite", None), ("pm_aligned", None),
         ("pp_opposite_eps", 0.25), ("pm_aligned_eps", 0.25)],
    )
    def test_factorization_identity_on_branch(self, tag, eps, rng):
        xi = rng.uniform(-8, 8, 20000)
        eta = rng.uniform(-8, 8, 20000)
        mask = modulation_branch_mask(tag, xi, eta)
        spec = modulation_phase_spec(tag, eps)
        lhs = phase_direct(spec, xi[mask], eta[mask])
        rhs = modulation_prefactor(tag, xi[mask], eta[mask], eps) * modulation_value(
            tag, xi[mask], eta[mask], eps
        )
        assert np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))) <= 1e-12

    def test_eps_required(self):
        with pytest.raises(ConfigurationError):
            modulation_value("pm_aligned_eps", 1.0, 1.0)


class TestCutoffSelection:
    def test_dyadic_examples(self):
        assert cutoff_D(2.0**-3, 2.0 / 3.0) == 2
        assert cutoff_D(2.0**-6, 5.0 / 6.0) == 5

    def test_non_dyadic(self):
        assert cutoff_D(0.1, 2.0 / 3.0) == 2

    def test_domain(self):
        with pytest.raises(DomainError):
            cutoff_D(1.0, 2.0 / 3.0)
        with pytest.raises(DomainError):
            cutoff_D(1.5, 2.0 / 3.0)


class TestMeasures:
    def test_shrinks_to_zero(self):
        reg = region_s_plus()
        big = small_modulation_measure("pp_opposite", 4, reg)
        tiny = small_modulation_measure("pp_opposite", 18, reg)
        assert tiny < 1e-3 * big

    def test_region_without_zero_set_is_empty(self):
        # on eta in [4, 8] with xi ~ eta the modulation is >= 3/2*16 - 1
        reg = RatioRegion(4.0, 8.0, 31.0 / 32.0, 1.0)
        assert small_modulation_measure("pp_opposite", 4, reg) == 0.0

    def test_empty_region(self):
        reg = RatioRegion(2.0, 1.0, 0.9, 1.0)
        assert small_modulation_measure("pp_opposite", 5, reg) == 0.0

    def test_halving_ratio_on_s_plus(self):
        reg = region_s_plus()
        measures = [small_modulation_measure("pp_opposite", D, reg) for D in range(4, 11)]
        ratios = [measures[i] / measures[i + 1] for i in range(len(measures) - 1)]
        assert all(1.8 <= r <= 2.2 for r in ratios)

    def test_negative_eta_mirror_region(self):
        # measures agree under (xi, eta) -> (-xi, -eta)
        plus = small_modulation_measure("pp_opposite", 6, region_s_plus())
        minus = small_modulation_measure(
            "pp_opposite", 6, RatioRegion(-(2.0**6), -0.25, 31.0 / 32.0, 1.0)
        )
        assert minus == pytest.approx(plus, rel=1e-6)


class TestJacobians:
    def test_point_values(self):
        assert jacobian_psi("pp_opposite", 1.0, 1.0) == pytest.approx(1.5)
        assert jacobian_psi("pm_aligned", 1.0, 1.0) == pytest.approx(0.5)
        val = jacobian_psi("pm_aligned_eps", 2.0, 2.0, eps=0.25)
        assert val == pytest.approx(0.25 * (24 - 12))
        # same order as sqrt(eps)*eta = 1*2
        assert 0.5 <= val / (np.sqrt(0.25) * 2.0) <= 8.0

    def test_positivity_and_comparability_on_named_sets(self, rng):
        eta = rng.uniform(0.25, 2.0**6, 5000)
        xi = eta * rng.uniform(31.0 / 32.0, 1.0, 5000)
        jac = jacobian_psi("pp_opposite", xi, eta)
        assert np.all(jac > 0)
        assert np.all(jac / eta >= 1.3) and np.all(jac / eta <= 1.6)

        xi2 = eta * rng.uniform(1.0, 33.0 / 32.0, 5000)
        jac2 = jacobian_psi("pm_aligned", xi2, eta)
        assert np.all(jac2 > 0)
        assert np.all(jac2 / eta >= 0.4) and np.all(jac2 / eta <= 0.55)

        eps = 0.1
        eta3 = rng.uniform(0.25, 2.0**6, 5000) / np.sqrt(eps)
        xi3 = eta3 * rng.uniform(1.0, 33.0 / 32.0, 5000)
        jac3 = jacobian_psi("pm_aligned_eps", xi3, eta3, eps=eps)
        ratio = jac3 / (np.sqrt(eps) * np.sqrt(eps) * eta3)
        assert np.all(jac3 > 0)
        assert np.all(ratio >= 5.9) and np.all(ratio <= 6.8)
