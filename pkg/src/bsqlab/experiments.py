"""Reproducible studies: existence-time scaling, integrator convergence,
the resonance-set atlas, and the energy-budget identity.

Every study takes a StudySpec, runs deterministically from its seeds,
and (when an output directory is set) writes fixed-schema CSV tables, a
JSON manifest recording grid, dt policy, cutoff-construction hash and
measured operator constants, and a matplotlib figure.

The scaling studies probe the norm-doubling time as the computable
proxy for the guaranteed existence horizon.  Runs that reach the
horizon cap without doubling are censored: they enter the table with a
flag and are excluded from the least-squares exponent fit (at least two
uncensored points are required to report an exponent).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .cutoffs import phi_construction_hash
from .errors import ConfigurationError, UnusableInputError
from .evolution import (
    IntegratorSpec,
    Trajectory,
    bsq_eps,
    bsq_unit,
    default_dt,
    gaussian_pair,
    random_multibump_pair,
    scale_to_energy,
    simulate,
    trajectory_to_csv,
)
from .goodvars import (
    StateZV,
    ansatz_threshold,
    good_forward,
    measured_b_constant,
    symmetrized_terms,
    time_derivative_V,
    weighted_real_inner,
)
from .phases import (
    lambda_dispersion,
    region_s_eps_gt_plus,
    region_s_gt,
    region_s_plus,
    small_modulation_measure,
)
from .reporting import (
    plot_atlas,
    plot_budget,
    plot_convergence,
    plot_scaling,
    write_csv,
    write_manifest,
)
from .spectral import l2_norm, linf_norm, make_grid, sobolev_norm

__all__ = [
    "StudySpec",
    "ScalingRow",
    "scaling_study",
    "convergence_study",
    "resonance_atlas",
    "energy_budget",
    "budget_study",
    "fit_doubling_exponent",
    "study_manifest",
]

STUDIES = ("scaling_unit", "scaling_eps", "convergence", "atlas", "energy_budget")


@dataclass(frozen=True)
class StudySpec:
    study: str
    epsilon_list: tuple = (0.2, 0.1, 0.05, 0.025)
    n: int = 256
    half_length: float = 32.0 * np.pi
    n0: int = 4
    seeds: tuple = (1234,)
    dt_safety: float = 0.5
    amplitude: float = 0.4
    sigma: float = 4.0
    horizon: float = 2.0  # convergence / budget run length
    horizon_factor: float = 10.0  # scaling cap = factor * eps^(-horizon_exponent)
    horizon_exponent: float = 1.5
    exit_norm_factor: float = 2.0
    d_values: tuple = (4, 5, 6, 7, 8, 9, 10)
    levels: int = 4  # dt-halving levels in the convergence study
    sample_every: int = 20
    data_family: str = "gaussian"  # or "multibump"
    output_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ConfigurationError(f"unknown study {self.study!r}")
        eps = tuple(self.epsilon_list)
        if any(not 0.0 < e < 1.0 for e in eps):
            raise ConfigurationError("epsilon_list entries must lie in (0, 1)")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("epsilon_list must be strictly descending")
        if self.data_family not in ("gaussian", "multibump"):
            raise ConfigurationError(f"unknown data family {self.data_family!r}")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")


def _initial_state(spec: StudySpec, grid, seed: int, model):
    if spec.data_family == "multibump":
        rng = np.random.default_rng(seed)
        return random_multibump_pair(grid, rng, sigma_range=(spec.sigma * 0.75, spec.sigma * 1.5), model=model)
    return gaussian_pair(
        grid, spec.amplitude, spec.amplitude, sigma=spec.sigma, x0_v=spec.sigma, model=model
    )


# ---------------------------------------------------------------------------
# existence-time scaling


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    seed: int
    t_double: float
    censored: bool
    horizon_cap: float
    dt: float
    n: int
    half_length: float


def _scaling_run(spec: StudySpec, eps: float, seed: int) -> ScalingRow:
    grid = make_grid(spec.n, spec.half_length)
    kind = bsq_unit() if spec.study == "scaling_unit" else bsq_eps(eps)
    state = _initial_state(spec, grid, seed, kind.model)
    # Theorem normalization: data of size eps for the unit model, O(1)
    # data for the eps model
    target = eps if spec.study == "scaling_unit" else 1.0
    state = scale_to_energy(state, target, spec.n0)
    dt = default_dt(kind, grid, spec.dt_safety)
    cap = spec.horizon_factor * eps ** (-spec.horizon_exponent)
    run = IntegratorSpec(
        dt=dt, exit_norm_factor=spec.exit_norm_factor, exit_sobolev_index=spec.n0
    )
    traj = simulate(state, kind, run, horizon=cap, sample_every=10**9)
    doubled = traj.exit_status.kind == "norm_doubled"
    t_double = traj.exit_status.time if doubled else cap
    return ScalingRow(eps, seed, t_double, not doubled, cap, traj.dt, spec.n, spec.half_length)


def _scaling_payload(args):
    spec_dict, eps, seed = args
    return _scaling_run(StudySpec(**spec_dict), eps, seed)


def fit_doubling_exponent(eps_values, times, censored) -> dict:
    """Least-squares slope of log T against log(1/eps), censored excluded."""
    eps_values = np.asarray(eps_values, dtype=float)
    times = np.asarray(times, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    keep = ~censored
    if int(np.sum(keep)) < 2:
        return {
            "exponent": None,
            "intercept": None,
            "residual_rms": None,
            "n_uncensored": int(np.sum(keep)),
            "flag": "lower_bound_only",
        }
    x = np.log(1.0 / eps_values[keep])
    y = np.log(times[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return {
        "exponent": float(slope),
        "intercept": float(intercept),
        "residual_rms": float(np.sqrt(np.mean(resid**2))),
        "n_uncensored": int(np.sum(keep)),
        "flag": "ok",
    }


def scaling_study(spec: StudySpec) -> tuple[list[ScalingRow], dict]:
    """Doubling time per (eps, seed) plus the fitted exponent."""
    if spec.study not in ("scaling_unit", "scaling_eps"):
        raise ConfigurationError("scaling_study needs a scaling_* StudySpec")
    if len(spec.epsilon_list) < 3:
        raise ConfigurationError("scaling needs at least 3 epsilon values")
    jobs = [(asdict(spec), eps, seed) for eps in spec.epsilon_list for seed in spec.seeds]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            rows = list(pool.map(_scaling_payload, jobs))
    else:
        rows = [_scaling_payload(j) for j in jobs]
    fit = fit_doubling_exponent(
        [r.eps for r in rows], [r.t_double for r in rows], [r.censored for r in rows]
    )
    if spec.output_dir:
        out = Path(spec.output_dir)
        write_csv(
            out / "scaling.csv",
            ["eps", "seed", "t_double", "censored", "horizon_cap", "dt", "n", "L"],
            [
                (r.eps, r.seed, r.t_double, r.censored, r.horizon_cap, r.dt, r.n, r.half_length)
                for r in rows
            ],
        )
        write_csv(
            out / "scaling_fit.csv",
            ["exponent", "intercept", "residual_rms", "n_uncensored", "flag"],
            [
                (
                    fit["exponent"] if fit["exponent"] is not None else "",
                    fit["intercept"] if fit["intercept"] is not None else "",
                    fit["residual_rms"] if fit["residual_rms"] is not None else "",
                    fit["n_uncensored"],
                    fit["flag"],
                )
            ],
        )
        write_manifest(out / "manifest.json", study_manifest(spec))
        plot_scaling(
            [r.eps for r in rows],
            [r.t_double for r in rows],
            [r.censored for r in rows],
            fit,
            out / "scaling.png",
        )
    return rows, fit


# ---------------------------------------------------------------------------
# temporal convergence


def convergence_study(spec: StudySpec) -> list[dict]:
    """dt-halving errors against a dt/8 reference, with observed orders."""
    grid = make_grid(spec.n, spec.half_length)
    eps = spec.epsilon_list[0]
    kind = bsq_eps(eps)
    state = _initial_state(spec, grid, spec.seeds[0], kind.model)

    def final_state(dt):
        run = IntegratorSpec(dt=dt, exit_norm_factor=1e9, exit_sobolev_index=spec.n0)
        traj = simulate(state, kind, run, horizon=spec.horizon, sample_every=10**9, collect_states=True)
        s = traj.states[-1]
        return np.concatenate([s.zeta.samples, s.v.samples])

    base = default_dt(kind, grid, spec.dt_safety)
    dts = [base / 2**i for i in range(max(1, spec.levels))]
    reference = final_state(dts[-1] / 8.0)
    scale = float(np.linalg.norm(reference))
    errors = [float(np.linalg.norm(final_state(dt) - reference)) / scale for dt in dts]
    rows = []
    for i, (dt, err) in enumerate(zip(dts, errors)):
        order = None
        if i + 1 < len(errors) and errors[i + 1] > 0:
            order = float(np.log2(err / errors[i + 1]))
        rows.append(
            {
                "dt": dt,
                "error": err,
                "order": order,
                "at_floor": err < 1e-13,
            }
        )
    if spec.output_dir:
        out = Path(spec.output_dir)
        write_csv(
            out / "convergence.csv",
            ["dt", "error", "order", "at_floor"],
            [
                (r["dt"], r["error"], r["order"] if r["order"] is not None else "", r["at_floor"])
                for r in rows
            ],
        )
        write_manifest(out / "manifest.json", study_manifest(spec))
        plot_convergence(dts, errors, out / "convergence.png")
    return rows


# ---------------------------------------------------------------------------
# resonance atlas


def _atlas_kinds(spec: StudySpec):
    kinds = [
        ("pp_opposite", None, "S_plus", region_s_plus()),
        ("pm_aligned", None, "S_gt", region_s_gt()),
    ]
    for eps in spec.epsilon_list:
        kinds.append(("pm_aligned_eps", eps, "S_eps_gt_plus", region_s_eps_gt_plus(eps)))
    return kinds


def resonance_atlas(spec: StudySpec) -> list[dict]:
    """Measures of {|modulation| <= 2^-D} per kind, with halving ratios."""
    rows = []
    series = []
    fits = []
    for tag, eps, region_name, region in _atlas_kinds(spec):
        measures = [
            small_modulation_measure(tag, D, region, eps=eps) for D in spec.d_values
        ]
        label = tag if eps is None else f"{tag}(eps={eps:g})"
        series.append((label, list(spec.d_values), measures))
        for i, (D, m) in enumerate(zip(spec.d_values, measures)):
            ratio = None
            if i + 1 < len(measures) and measures[i + 1] > 0:
                ratio = m / measures[i + 1]
            rows.append(
                {
                    "kind": tag,
                    "eps": eps if eps is not None else 0.0,
                    "region": region_name,
                    "D": D,
                    "measure": m,
                    "ratio_to_next": ratio,
                }
            )
        positive = [(d, m) for d, m in zip(spec.d_values, measures) if m > 0]
        if len(positive) >= 2:
            ds, ms = zip(*positive)
            slope = float(np.polyfit(np.asarray(ds, float), np.log2(ms), 1)[0])
        else:
            slope = None
        fits.append({"kind": tag, "eps": eps if eps is not None else 0.0, "log2_slope": slope})
    if spec.output_dir:
        out = Path(spec.output_dir)
        write_csv(
            out / "atlas.csv",
            ["kind", "eps", "region", "D", "measure", "ratio_to_next"],
            [
                (
                    r["kind"],
                    r["eps"],
                    r["region"],
                    r["D"],
                    r["measure"],
                    r["ratio_to_next"] if r["ratio_to_next"] is not None else "",
                )
                for r in rows
            ],
        )
        write_csv(
            out / "atlas_fit.csv",
            ["kind", "eps", "log2_slope"],
            [
                (f["kind"], f["eps"], f["log2_slope"] if f["log2_slope"] is not None else "")
                for f in fits
            ],
        )
        write_manifest(out / "manifest.json", study_manifest(spec))
        plot_atlas(series, out / "atlas.png")
    return rows


# ---------------------------------------------------------------------------
# energy budget


def energy_budget(trajectory: Trajectory, n0: int | None = None) -> list[dict]:
    """Per-sample comparison of d/dt ||V||_{H^n0}^2 with the term sum.

    Both sides are evaluated analytically from the state (no finite
    differences in time): the left side pairs the full nonlinear right-
    hand side with V, the right side sums the pairings of each grouped
    term.  The mismatch is pure regrouping error and sits at roundoff.
    """
    if trajectory.states is None:
        raise UnusableInputError("energy budget needs a trajectory with state dumps")
    if trajectory.system.tag == "kdv_diag":
        raise UnusableInputError("energy budget applies to the bsq systems")
    n0 = trajectory.n0 if n0 is None else n0
    grouping = "prop31" if trajectory.system.tag == "bsq_unit" else "prop51"
    rows = []
    for t, state in zip(trajectory.times, trajectory.states):
        grid = state.grid
        good = good_forward(state, n0)
        Vc = good.V.coefficients
        lam = lambda_dispersion(grid.xi, state.model)
        nonlinear = time_derivative_V(state).coefficients - 1j * lam * Vc
        de_dt = 2.0 * weighted_real_inner(grid, nonlinear, Vc, n0)
        terms = symmetrized_terms(state, n0, grouping)
        contribs = {k: 2.0 * weighted_real_inner(grid, v, Vc, n0) for k, v in terms.items()}
        total = sum(contribs.values())
        mismatch = abs(de_dt - total)
        scale = max(abs(de_dt), max(abs(c) for c in contribs.values()), 1e-300)
        v_h2 = sobolev_norm(good.V, n0) ** 2
        l_scale = linf_norm(state.zeta) * l2_norm(state.v) * v_h2
        rows.append(
            {
                "t": float(t),
                "dE_dt": de_dt,
                "sum_terms": total,
                "mismatch": mismatch,
                "mismatch_rel": mismatch / scale,
                "l_term_ratio": abs(contribs.get("L", 0.0)) / (2.0 * l_scale) if l_scale > 0 else 0.0,
                **{f"term_{k}": v for k, v in contribs.items()},
            }
        )
    return rows


def budget_study(spec: StudySpec) -> list[dict]:
    """Simulate with state dumps at the sampling cadence, then budget."""
    grid = make_grid(spec.n, spec.half_length)
    eps = spec.epsilon_list[0]
    kind = bsq_eps(eps)
    state = _initial_state(spec, grid, spec.seeds[0], kind.model)
    run = IntegratorSpec(
        dt=default_dt(kind, grid, spec.dt_safety),
        exit_norm_factor=spec.exit_norm_factor,
        exit_sobolev_index=spec.n0,
    )
    traj = simulate(
        state, kind, run, horizon=spec.horizon, sample_every=spec.sample_every, collect_states=True
    )
    rows = energy_budget(traj, spec.n0)
    if spec.output_dir:
        out = Path(spec.output_dir)
        keys = [k for k in rows[0] if k.startswith("term_")]
        write_csv(
            out / "energy_budget.csv",
            ["t", "dE_dt", "sum_terms", "mismatch", "mismatch_rel", "l_term_ratio", *keys],
            [
                (
                    r["t"],
                    r["dE_dt"],
                    r["sum_terms"],
                    r["mismatch"],
                    r["mismatch_rel"],
                    r["l_term_ratio"],
                    *[r[k] for k in keys],
                )
                for r in rows
            ],
        )
        trajectory_to_csv(traj, out / "trajectory.csv")
        write_manifest(out / "manifest.json", study_manifest(spec))
        plot_budget([r["t"] for r in rows], [r["mismatch_rel"] for r in rows], out / "budget.png")
    return rows


# ---------------------------------------------------------------------------
# provenance


def study_manifest(spec: StudySpec) -> dict:
    """Grid, dt policy, cutoff hash and empirical constants for provenance."""
    grid = make_grid(spec.n, spec.half_length)
    from . import __version__

    def finite(x):
        return None if math.isinf(x) else x

    entries = {
        "package_version": __version__,
        "study": spec.study,
        "n": spec.n,
        "half_length": spec.half_length,
        "mode_spacing": grid.dxi,
        "dealias_cutoff": grid.dealias_cutoff,
        "n0": spec.n0,
        "dt_policy": f"max|xi(1-eps xi^2)| * dt <= {spec.dt_safety} on the retained band",
        "epsilon_list": list(spec.epsilon_list),
        "seeds": list(spec.seeds),
        "data_family": spec.data_family,
        "phi_construction_sha256": phi_construction_hash(),
        "c_b_unit": measured_b_constant(grid),
        "ansatz_threshold_unit": finite(ansatz_threshold(grid)),
    }
    if spec.epsilon_list:
        from .phases import eps_model

        model = eps_model(spec.epsilon_list[0])
        entries["c_b_eps_first"] = measured_b_constant(grid, model)
        entries["ansatz_threshold_eps_first"] = finite(ansatz_threshold(grid, model))
    return entries
