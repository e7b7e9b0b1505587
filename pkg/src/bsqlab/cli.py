"""Command-line surface: configuration parsing, study dispatch, outputs.

Commands: simulate, verify, atlas, scaling, convergence, budget.
Exit codes: 0 ok, 1 check failure, 2 configuration error, 3 runtime or
numerical failure.  The only environment variable honored is
OUTPUT_DIR, which overrides the configured output directory when --out
is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .errors import BsqlabError, CheckFailure, ConfigurationError
from .evolution import (
    IntegratorSpec,
    bsq_eps,
    bsq_unit,
    default_dt,
    gaussian_pair,
    random_multibump_pair,
    save_state_dump,
    simulate,
    trajectory_to_csv,
)
from .experiments import (
    StudySpec,
    budget_study,
    convergence_study,
    resonance_atlas,
    scaling_study,
    study_manifest,
)
from .reporting import plot_trajectory, write_manifest
from .spectral import make_grid
from .verify import run_all_checks

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsqlab",
        description="Numerical laboratory for strongly dispersive Boussinesq systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "integrate one system and write the trajectory table"),
        ("verify", "run the machine-precision invariant suite"),
        ("atlas", "tabulate small-modulation set measures"),
        ("scaling", "norm-doubling time against epsilon"),
        ("convergence", "temporal convergence study"),
        ("budget", "energy budget identity along a trajectory"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", default=None, help="path to a key = value config file")
        cmd.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one configuration key (repeatable)",
        )
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--jobs", type=int, default=None, help="parallel workers for sweeps")
        cmd.add_argument("--seed", type=int, default=None, help="base random seed")
        cmd.add_argument("--model", choices=("unit", "eps"), default=None, help="system model")
        cmd.add_argument("--eps", default=None, help="epsilon value or comma list")
    return parser


def _merge_config(args) -> RunConfig:
    overrides = list(args.set)
    if args.model is not None:
        overrides.append(f"model={args.model}")
    if args.eps is not None:
        if "," in args.eps:
            overrides.append(f"eps_list={args.eps}")
        else:
            overrides.append(f"eps={args.eps}")
            overrides.append(f"eps_list={args.eps}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.jobs is not None:
        overrides.append(f"jobs={args.jobs}")
    config = parse_config(args.config, overrides)
    out = args.out or os.environ.get("OUTPUT_DIR") or config.output_dir
    config.values["output_dir"] = out
    return config


def _study_spec(config: RunConfig, study: str) -> StudySpec:
    eps_list = config.eps_list
    if study in ("convergence", "energy_budget") and len(eps_list) > 1:
        eps_list = (config.eps,)
    return StudySpec(
        study=study,
        epsilon_list=tuple(eps_list),
        n=config.n,
        half_length=config.half_length,
        n0=config.n0,
        seeds=config.seeds,
        dt_safety=config.dt_safety,
        amplitude=config.amplitude,
        sigma=config.sigma,
        horizon=config.horizon,
        horizon_factor=config.horizon_factor,
        horizon_exponent=config.horizon_exponent,
        exit_norm_factor=config.exit_factor,
        d_values=tuple(config.d_values),
        levels=config.levels,
        sample_every=config.sample_every,
        data_family=config.data_family,
        output_dir=config.output_dir,
        jobs=config.jobs,
    )


def _cmd_simulate(config: RunConfig) -> int:
    grid = make_grid(config.n, config.half_length)
    kind = bsq_unit() if config.model == "unit" else bsq_eps(config.eps)
    if config.data_family == "multibump":
        rng = np.random.default_rng(config.seed)
        state = random_multibump_pair(grid, rng, model=kind.model)
    else:
        state = gaussian_pair(
            grid, config.amplitude, config.amplitude, sigma=config.sigma,
            x0_v=config.sigma, model=kind.model,
        )
    spec = IntegratorSpec(
        dt=default_dt(kind, grid, config.dt_safety),
        exit_norm_factor=config.exit_factor,
        exit_sobolev_index=config.n0,
    )
    traj = simulate(
        state, kind, spec, horizon=config.horizon,
        sample_every=config.sample_every, collect_states=config.dump_states,
    )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(traj, out / "trajectory.csv")
    plot_trajectory(traj, out / "trajectory.png")
    if config.dump_states:
        save_state_dump(traj, out / "states.bin")
    write_manifest(out / "manifest.json", study_manifest(_study_spec(config, "energy_budget")))
    h0 = traj.hamiltonian[0]
    drift = float(np.max(np.abs(traj.hamiltonian - h0))) / max(abs(h0), 1e-300)
    print(
        f"simulate: {kind.tag} eps={kind.eps:g} n={config.n} dt={traj.dt:.3e} "
        f"exit={traj.exit_status.kind}@{traj.exit_status.time:g} H-drift={drift:.2e}"
    )
    print(f"outputs in {out}")
    return 0


def _cmd_verify(config: RunConfig) -> int:
    results = run_all_checks(config.n, config.half_length)
    failures = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.check}: measured={r.measured:.3e} threshold={r.threshold:.1e}")
    for r in failures:
        print(
            json.dumps({"check": r.check, "measured": r.measured, "threshold": r.threshold}),
            file=sys.stderr,
        )
    if failures:
        raise CheckFailure(f"{len(failures)} invariant check(s) failed")
    print(f"all {len(results)} checks passed")
    return 0


def _cmd_scaling(config: RunConfig) -> int:
    study = "scaling_unit" if config.model == "unit" else "scaling_eps"
    rows, fit = scaling_study(_study_spec(config, study))
    for r in rows:
        mark = "censored" if r.censored else "doubled"
        print(f"eps={r.eps:g} seed={r.seed} T={r.t_double:.4g} ({mark})")
    if fit["exponent"] is None:
        print(f"exponent: not reported ({fit['flag']}; doubling times are lower bounds)")
    else:
        print(
            f"fitted exponent {fit['exponent']:.4f} "
            f"(residual rms {fit['residual_rms']:.2e}, {fit['n_uncensored']} points)"
        )
    print(f"outputs in {config.output_dir}")
    return 0


def _cmd_convergence(config: RunConfig) -> int:
    rows = convergence_study(_study_spec(config, "convergence"))
    for r in rows:
        order = "-" if r["order"] is None else f"{r['order']:.3f}"
        floor = " (at floor)" if r["at_floor"] else ""
        print(f"dt={r['dt']:.4e} error={r['error']:.4e} order={order}{floor}")
    print(f"outputs in {config.output_dir}")
    return 0


def _cmd_atlas(config: RunConfig) -> int:
    rows = resonance_atlas(_study_spec(config, "atlas"))
    for r in rows:
        ratio = "-" if r["ratio_to_next"] is None else f"{r['ratio_to_next']:.3f}"
        print(
            f"{r['kind']} eps={r['eps']:g} D={r['D']}: "
            f"measure={r['measure']:.6e} ratio={ratio}"
        )
    print(f"outputs in {config.output_dir}")
    return 0


def _cmd_budget(config: RunConfig) -> int:
    rows = budget_study(_study_spec(config, "energy_budget"))
    worst = max(r["mismatch_rel"] for r in rows)
    print(f"energy budget over {len(rows)} samples: worst relative mismatch {worst:.3e}")
    print(f"outputs in {config.output_dir}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "scaling": _cmd_scaling,
    "convergence": _cmd_convergence,
    "atlas": _cmd_atlas,
    "budget": _cmd_budget,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _merge_config(args)
        return _COMMANDS[args.command](config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1
    except BsqlabError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - map unexpected failures to exit 3
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
