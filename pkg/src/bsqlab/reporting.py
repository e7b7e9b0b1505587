"""Delimited output and figure rendering for the study harness.

CSV files are the canonical, bit-reproducible record (floats serialized
with repr-faithful %.17g).  Each study also renders a matplotlib figure
next to its table; figures are presentation aids and carry no data not
present in the CSVs.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "write_csv",
    "write_manifest",
    "plot_trajectory",
    "plot_scaling",
    "plot_convergence",
    "plot_atlas",
    "plot_budget",
]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_manifest(path, entries: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trajectory(trajectory, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(trajectory.times, trajectory.e_n0, lw=1.2)
    ax1.set_ylabel(f"$E_{{N_0}}$ ($N_0$={trajectory.n0})")
    ax1.grid(alpha=0.3)
    h0 = trajectory.hamiltonian[0]
    scale = max(abs(h0), 1e-300)
    ax2.plot(trajectory.times, (trajectory.hamiltonian - h0) / scale, lw=1.2)
    ax2.set_ylabel("relative H drift")
    ax2.set_xlabel("t")
    ax2.grid(alpha=0.3)
    fig.suptitle(f"{trajectory.system.tag} (eps={trajectory.system.eps:g})")
    return _save(fig, path)


def plot_scaling(eps_values, doubling_times, censored, fit, path) -> Path:
    eps_values = np.asarray(eps_values, dtype=float)
    doubling_times = np.asarray(doubling_times, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    free = ~censored
    if np.any(free):
        ax.loglog(1.0 / eps_values[free], doubling_times[free], "o", label="doubled")
    if np.any(censored):
        ax.loglog(
            1.0 / eps_values[censored],
            doubling_times[censored],
            "^",
            mfc="none",
            label="censored (lower bound)",
        )
    if fit is not None and fit.get("exponent") is not None:
        x = np.linspace(np.log(1.0 / eps_values.max()), np.log(1.0 / eps_values.min()), 50)
        ax.loglog(
            np.exp(x),
            np.exp(fit["intercept"] + fit["exponent"] * x),
            "-",
            lw=1,
            label=f"fit slope {fit['exponent']:.3f}",
        )
    ax.set_xlabel(r"$1/\varepsilon$")
    ax.set_ylabel("norm-doubling time")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    return _save(fig, path)


def plot_convergence(dts, errors, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ax.loglog(dts, errors, "o-", label="measured")
    ref = errors[0] * (dts / dts[0]) ** 4
    ax.loglog(dts, ref, "--", lw=1, label="order 4")
    ax.set_xlabel("dt")
    ax.set_ylabel("final-state error")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    return _save(fig, path)


def plot_atlas(series, path) -> Path:
    """series: list of (label, D_array, measure_array)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, ds, measures in series:
        measures = np.asarray(measures, dtype=float)
        ok = measures > 0
        ax.semilogy(np.asarray(ds)[ok], measures[ok], "o-", base=2, label=label)
    ax.set_xlabel("D")
    ax.set_ylabel("measure of small-modulation set")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_budget(times, mismatch_rel, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(times, np.maximum(np.asarray(mismatch_rel, dtype=float), 1e-18), "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("relative budget mismatch")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)
