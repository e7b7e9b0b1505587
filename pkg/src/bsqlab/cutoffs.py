"""Dyadic cutoffs, Littlewood-Paley projections, and Bony para-products.

The base cutoff phi is an explicit C-infinity even function: 1 on
[-5/4, 5/4], 0 outside (-3/2, 3/2), with the standard exp(-1/t) bump
quotient on the transition.  Dyadic pieces:

    phi_k(x)    = phi(x/2^k) - phi(x/2^(k-1))
    phi_leq_k   = phi(x/2^k)
    phi_geq_k   = 1 - phi_leq_(k-1)
    phi_I       = sum_{k in I} phi_k

Para-products follow the decomposition  f*g = T_f g + T_g f + R(f, g)
with  T_f g = sum_j P_{<=j-7} f * P_j g  and
R(f, g) = sum_j P_j f * P_[j-6, j+6] g.  On a grid, the j-sum runs over
the resolvable shell range; every pointwise product is dealiased, which
makes the decomposition exact on band-limited zero-mean data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from math import ceil, floor, log2

import numpy as np

from .errors import ConfigurationError
from .spectral import (
    ComplexField,
    Field,
    Grid1D,
    RealField,
    _check_same_grid,
    dealias_spectrum,
)

__all__ = [
    "CutoffFamily",
    "phi_base",
    "phi_shell",
    "phi_leq",
    "phi_geq",
    "phi_interval",
    "shell_weight",
    "shell_range",
    "lp_project",
    "paraproduct",
    "remainder",
    "paraproduct_weight",
    "remainder_weight",
    "phi_construction_hash",
]

PLATEAU_RADIUS = 1.25
SUPPORT_RADIUS = 1.5
# T_f g pairs shells j with low frequencies <= j-7; R(f,g) pairs |j-k| <= 6
PARA_LOW_OFFSET = 7
REMAINDER_WIDTH = 6


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_ratio(t: np.ndarray) -> np.ndarray:
    b = _bump(t)
    return b / (b + _bump(1.0 - t))


def phi_base(x) -> np.ndarray | float:
    """The base cutoff: 1 on |x| <= 5/4, 0 on |x| >= 3/2, smooth between."""
    scalar = np.ndim(x) == 0
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.zeros(ax.shape)
    out[ax <= PLATEAU_RADIUS] = 1.0
    mid = (ax > PLATEAU_RADIUS) & (ax < SUPPORT_RADIUS)
    if np.any(mid):
        t = (SUPPORT_RADIUS - ax[mid]) / (SUPPORT_RADIUS - PLATEAU_RADIUS)
        out[mid] = _bump_ratio(t)
    return float(out) if scalar else out


def phi_leq(k: int, x) -> np.ndarray | float:
    return phi_base(np.asarray(x, dtype=float) / 2.0**k)


def phi_shell(k: int, x) -> np.ndarray | float:
    return phi_leq(k, x) - phi_leq(k - 1, x)


def phi_geq(k: int, x) -> np.ndarray | float:
    return 1.0 - phi_leq(k - 1, x)


def phi_interval(lo: int, hi: int, x) -> np.ndarray | float:
    # telescoping sum of shells lo..hi
    return phi_leq(hi, x) - phi_leq(lo - 1, x)


def shell_weight(kind: str, x, k: int | None = None, interval=None):
    """Evaluate the named cutoff pointwise.

    kind is one of "shell", "leq", "geq" (with k) or "interval"
    (with interval=(lo, hi)).
    """
    if kind == "shell":
        return phi_shell(k, x)
    if kind == "leq":
        return phi_leq(k, x)
    if kind == "geq":
        return phi_geq(k, x)
    if kind == "interval":
        lo, hi = interval
        return phi_interval(lo, hi, x)
    raise ConfigurationError(f"unknown shell weight kind {kind!r}")


@dataclass(frozen=True)
class CutoffFamily:
    """The fixed cutoff family and the shell range resolvable on a grid."""

    plateau_radius: float = PLATEAU_RADIUS
    support_radius: float = SUPPORT_RADIUS

    def shell_range(self, grid: Grid1D) -> range:
        return shell_range(grid)


def shell_range(grid: Grid1D) -> range:
    """Dyadic indices j whose shells meet the resolvable band.

    Outside [j_min, j_max] the shells vanish on all grid modes, so the
    lowest P_{<=k} absorbs the (zero) mean and the partition of unity
    holds exactly on nonzero modes.
    """
    j_min = floor(log2(grid.dxi)) - 1
    j_max = ceil(log2(grid.xi_max)) + 1
    return range(j_min, j_max + 1)


@lru_cache(maxsize=16)
def _shell_masks(grid: Grid1D) -> dict:
    ax = np.abs(grid.xi)
    js = list(shell_range(grid))
    shells = np.stack([phi_shell(j, ax) for j in js])
    lows = np.stack([phi_leq(j - PARA_LOW_OFFSET, ax) for j in js])
    mids = np.stack(
        [phi_interval(j - REMAINDER_WIDTH, j + REMAINDER_WIDTH, ax) for j in js]
    )
    return {"js": js, "shells": shells, "lows": lows, "mids": mids}


def lp_project(u: Field, kind: str, k: int | None = None, interval=None) -> Field:
    """Littlewood-Paley projection: multiplier shell_weight(kind, |xi|)."""
    weights = shell_weight(kind, np.abs(u.grid.xi), k=k, interval=interval)
    coeffs = weights * u.spectrum
    if isinstance(u, RealField):
        return RealField(u.grid, u.grid.inverse(coeffs).real, u.zero_mean)
    return ComplexField(u.grid, coeffs)


def _inverse_many(grid: Grid1D, mat: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.ifftshift(mat / grid._fwd_factor, axes=1), axis=1)


def _para_spectrum(grid: Grid1D, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    masks = _shell_masks(grid)
    low_f = _inverse_many(grid, masks["lows"] * fc)
    shell_g = _inverse_many(grid, masks["shells"] * gc)
    prod = np.sum(low_f * shell_g, axis=0)
    return dealias_spectrum(grid, grid.forward(prod))


def _remainder_spectrum(grid: Grid1D, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    masks = _shell_masks(grid)
    shell_f = _inverse_many(grid, masks["shells"] * fc)
    mid_g = _inverse_many(grid, masks["mids"] * gc)
    prod = np.sum(shell_f * mid_g, axis=0)
    return dealias_spectrum(grid, grid.forward(prod))


def _wrap(grid: Grid1D, coeffs: np.ndarray, *inputs: Field) -> Field:
    if all(isinstance(u, RealField) for u in inputs):
        zero_mean = all(u.zero_mean for u in inputs)
        return RealField(grid, grid.inverse(coeffs).real, zero_mean)
    return ComplexField(grid, coeffs)


def paraproduct(f: Field, g: Field) -> Field:
    """Low-high para-product T_f g (f carries the low frequencies)."""
    grid = _check_same_grid(f, g)
    return _wrap(grid, _para_spectrum(grid, f.spectrum, g.spectrum), f, g)


def remainder(f: Field, g: Field) -> Field:
    """Bony remainder R(f, g) pairing comparable shells."""
    grid = _check_same_grid(f, g)
    return _wrap(grid, _remainder_spectrum(grid, f.spectrum, g.spectrum), f, g)


# ---------------------------------------------------------------------------
# (xi, eta) kernel weights for the O(n^2) direct-summation route


def _weight_sum(low_arg: np.ndarray, shell_arg: np.ndarray, js, low_off: int, width: int):
    total = np.zeros(np.broadcast(low_arg, shell_arg).shape)
    for j in js:
        if width == 0:
            total += phi_leq(j - low_off, low_arg) * phi_shell(j, shell_arg)
        else:
            total += phi_shell(j, low_arg) * phi_interval(j - width, j + width, shell_arg)
    return total


def paraproduct_weight(xi_minus_eta, eta, js=None) -> np.ndarray:
    """sum_j phi_{<=j-7}(|xi-eta|) phi_j(|eta|), the T_f g pairing weight."""
    a = np.abs(np.asarray(xi_minus_eta, dtype=float))
    b = np.abs(np.asarray(eta, dtype=float))
    if js is None:
        js = _default_js(b)
    return _weight_sum(a, b, js, PARA_LOW_OFFSET, 0)


def remainder_weight(xi_minus_eta, eta, js=None) -> np.ndarray:
    """sum_j phi_j(|xi-eta|) phi_[j-6,j+6](|eta|), the R(f,g) pairing weight."""
    a = np.abs(np.asarray(xi_minus_eta, dtype=float))
    b = np.abs(np.asarray(eta, dtype=float))
    if js is None:
        js = _default_js(a)
    return _weight_sum(a, b, js, 0, REMAINDER_WIDTH)


def _default_js(values: np.ndarray) -> range:
    finite = values[np.isfinite(values) & (values > 0)]
    if finite.size == 0:
        return range(0, 1)
    lo = floor(log2(float(np.min(finite)))) - 1
    hi = ceil(log2(float(np.max(finite)))) + 1
    return range(lo, hi + 1)


def phi_construction_hash() -> str:
    """SHA-256 of phi on a fixed probe grid; records the cutoff construction."""
    probe = np.linspace(0.0, 2.0, 4097)
    values = np.asarray(phi_base(probe), dtype=np.float64)
    return hashlib.sha256(values.tobytes()).hexdigest()
