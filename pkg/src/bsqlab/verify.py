"""Invariant check suite behind the `verify` CLI command.

Each check measures one machine-precision identity (Bony exactness, the
direction-multiplier commutator, closed-form phases, conjugate symmetry
of B, decomposition residuals, conserved quantities) on a fixed seeded
ensemble and compares against its pinned threshold.  The identity
checks run on small unit-box grids that resolve the high-frequency band
of the smoothing correction; the conservation check uses the configured
production grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoffs import paraproduct, remainder
from .evolution import IntegratorSpec, bsq_eps, default_dt, gaussian_pair, simulate
from .goodvars import (
    b_bilinear,
    decomposition_residual,
    make_state,
    symmetrized_terms,
    time_derivative_V,
    good_forward,
)
from .phases import PhaseSpec, UNIT, eps_model, lambda_dispersion, phase_closed, phase_direct
from .spectral import (
    apply_multiplier,
    dealias_spectrum,
    direction_multiplier,
    l2_norm,
    linf_norm,
    make_grid,
    random_real_field,
)

__all__ = ["CheckResult", "run_all_checks"]


@dataclass(frozen=True)
class CheckResult:
    check: str
    measured: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.threshold


def _phase_oracle_check() -> CheckResult:
    xs = np.linspace(-10.0, 10.0, 401)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    keep = (X != 0) & (Y != 0) & (X != Y)
    worst = 0.0
    for model in (UNIT, eps_model(1.0), eps_model(0.25), eps_model(0.01)):
        for mu in (1, -1):
            for nu in (1, -1):
                spec = PhaseSpec(mu, nu, model)
                err = np.abs(phase_closed(spec, X, Y) - phase_direct(spec, X, Y))
                err = err / (1.0 + np.abs(X) ** 3 + np.abs(Y) ** 3)
                worst = max(worst, float(np.max(err[keep])))
    return CheckResult("phase_closed_vs_direct", worst, 1e-12)


def _bony_and_commutator_checks(n_pairs: int = 32, seed: int = 7):
    grid = make_grid(1024, 32.0 * np.pi)
    rng = np.random.default_rng(seed)
    direction = direction_multiplier(grid)
    worst_bony = 0.0
    worst_comm = 0.0
    for _ in range(n_pairs):
        f = random_real_field(grid, rng, amplitude=1.0, decay=1.5)
        g = random_real_field(grid, rng, amplitude=1.0, decay=1.5)
        product = dealias_spectrum(grid, grid.forward(f.samples * g.samples))
        bony = (
            paraproduct(f, g).spectrum + paraproduct(g, f).spectrum + remainder(f, g).spectrum
        )
        worst_bony = max(
            worst_bony,
            float(np.linalg.norm(bony - product) / np.linalg.norm(product)),
        )
        lhs = apply_multiplier(direction, paraproduct(f, g)).spectrum
        rhs = paraproduct(f, apply_multiplier(direction, g)).spectrum
        defect = float(np.linalg.norm(lhs - rhs)) * np.sqrt(grid.l2_weight)
        worst_comm = max(worst_comm, defect / (linf_norm(f) * l2_norm(g)))
    return (
        CheckResult("bony_decomposition", worst_bony, 1e-11),
        CheckResult("direction_commutator", worst_comm, 1e-12),
    )


def _b_reality_check(n_pairs: int = 32, seed: int = 11) -> CheckResult:
    grid = make_grid(512, np.pi)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in (UNIT, eps_model(0.1)):
        for _ in range(n_pairs):
            f = random_real_field(grid, rng, amplitude=1.0, decay=1.0)
            g = random_real_field(grid, rng, amplitude=1.0, decay=1.0)
            c = b_bilinear(f, g, model).spectrum
            scale = max(float(np.max(np.abs(c))), 1e-300)
            worst = max(worst, float(np.max(np.abs(c[1:][::-1] - np.conj(c[1:])))) / scale)
    return CheckResult("b_reality_symmetry", worst, 1e-13)


def _residual_checks(n_states: int = 5, seed: int = 13):
    grid = make_grid(512, np.pi)
    rng = np.random.default_rng(seed)
    worst_raw = worst_agree = 0.0
    for model, grouping in ((UNIT, "prop31"), (eps_model(0.1), "prop51")):
        for _ in range(n_states):
            zeta = random_real_field(grid, rng, amplitude=0.03, decay=2.0)
            v = random_real_field(grid, rng, amplitude=0.03, decay=2.0)
            state = make_state(zeta, v, model)
            worst_raw = max(worst_raw, decomposition_residual(state, 4, "raw_new_bsq"))
            raw = sum(symmetrized_terms(state, 4, "raw_new_bsq").values())
            grouped = sum(symmetrized_terms(state, 4, grouping).values())
            lam = lambda_dispersion(grid.xi, model)
            lhs = time_derivative_V(state).coefficients - 1j * lam * good_forward(state).V.coefficients
            denom = max(float(np.linalg.norm(lhs)), 1e-300)
            worst_agree = max(worst_agree, float(np.linalg.norm(grouped - raw)) / denom)
    return (
        CheckResult("decomposition_residual_raw", worst_raw, 1e-9),
        CheckResult("grouping_agreement", worst_agree, 1e-10),
    )


def _conservation_check(n: int, half_length: float) -> tuple[CheckResult, CheckResult]:
    grid = make_grid(n, half_length)
    kind = bsq_eps(0.1)
    state = gaussian_pair(grid, 0.1, 0.1, sigma=4.0, x0_v=4.0, model=kind.model)
    spec = IntegratorSpec(dt=default_dt(kind, grid), exit_sobolev_index=4)
    traj = simulate(state, kind, spec, horizon=5.0, sample_every=50)
    h0 = traj.hamiltonian[0]
    drift = float(np.max(np.abs(traj.hamiltonian - h0))) / max(abs(h0), 1e-300)
    mass = float(max(np.max(np.abs(traj.mass_zeta)), np.max(np.abs(traj.mass_v))))
    return (
        CheckResult("hamiltonian_drift", drift, 1e-8),
        CheckResult("mass_conservation", mass, 1e-12),
    )


def run_all_checks(n: int = 512, half_length: float = 32.0 * np.pi) -> list[CheckResult]:
    results = [_phase_oracle_check()]
    results.extend(_bony_and_commutator_checks())
    results.append(_b_reality_check())
    results.extend(_residual_checks())
    results.extend(_conservation_check(n, half_length))
    return results
