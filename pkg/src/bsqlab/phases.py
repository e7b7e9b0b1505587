"""Dispersion relations, quadratic interaction phases, and resonance geometry.

The dispersion relation lambda(xi) = |xi| - |xi|^3 (unit model) or
|xi| - eps*|xi|^3 (eps model) drives the quadratic phase

    Phi_{mu,nu}(xi, eta) = -lambda(xi) + mu*lambda(xi-eta) + nu*lambda(eta)

whose zero set is the resonance set.  This module provides both the
direct evaluation and the case-split closed forms, the reduced
modulation quadratics with their factorization prefactors, dyadic
modulation-cutoff selection, small-modulation set measures, and the
Jacobians of the frequency coordinate changes used to bound them.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor, log2

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "Model",
    "UNIT",
    "eps_model",
    "PhaseSpec",
    "lambda_dispersion",
    "phase_direct",
    "phase_closed",
    "degenerate_mask",
    "MODULATION_TAGS",
    "modulation_value",
    "modulation_prefactor",
    "modulation_branch_mask",
    "modulation_phase_spec",
    "cutoff_D",
    "RatioRegion",
    "region_s_plus",
    "region_s_gt",
    "region_s_eps_gt_plus",
    "small_modulation_measure",
    "jacobian_psi",
    "abcd_eigenvalues",
    "wellposed_predicate",
]


@dataclass(frozen=True)
class Model:
    """Dispersion model: "unit" (cubic coefficient 1) or "eps" (coefficient eps)."""

    kind: str = "unit"
    eps: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unit", "eps"):
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.kind == "eps" and not 0.0 < self.eps <= 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")

    @property
    def cubic_coefficient(self) -> float:
        return 1.0 if self.kind == "unit" else self.eps


UNIT = Model("unit")


def eps_model(eps: float) -> Model:
    return Model("eps", float(eps))


def lambda_dispersion(xi, model: Model = UNIT):
    """lambda(xi) = |xi| - eps|xi|^3, with eps = 1 for the unit model."""
    ax = np.abs(np.asarray(xi, dtype=float))
    out = ax - model.cubic_coefficient * ax**3
    return float(out) if np.ndim(xi) == 0 else out


@dataclass(frozen=True)
class PhaseSpec:
    """Sign pair (mu, nu) and model selecting one quadratic phase."""

    mu: int
    nu: int
    model: Model = UNIT

    def __post_init__(self):
        if self.mu not in (1, -1) or self.nu not in (1, -1):
            raise ConfigurationError("mu and nu must be +1 or -1")


def phase_direct(spec: PhaseSpec, xi, eta):
    """-lambda(xi) + mu*lambda(xi-eta) + nu*lambda(eta), evaluated directly."""
    m = spec.model
    out = (
        -lambda_dispersion(xi, m)
        + spec.mu * lambda_dispersion(np.asarray(xi, float) - np.asarray(eta, float), m)
        + spec.nu * lambda_dispersion(eta, m)
    )
    return out


def degenerate_mask(xi, eta) -> np.ndarray:
    """Points xi = 0, eta = 0 or xi = eta excluded from the closed forms."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (xi == 0.0) | (eta == 0.0) | (xi == eta)


def _closed_pp(xi, eta, eps):
    # (+,+): 3|xi||xi-eta||eta| when (xi-eta)*eta > 0, else
    # -(min/2)(3 eps xi^2 + 3 eps max^2 + eps min^2 - 4) with min/max of
    # |xi-eta|, |eta| (eps = 1 reproduces the unit model)
    d = xi - eta
    lo = np.minimum(np.abs(d), np.abs(eta))
    hi = np.maximum(np.abs(d), np.abs(eta))
    aligned = 3.0 * eps * np.abs(xi) * np.abs(d) * np.abs(eta)
    opposite = -0.5 * lo * (3.0 * eps * xi**2 + 3.0 * eps * hi**2 + eps * lo**2 - 4.0)
    return np.where(d * eta > 0, aligned, opposite)


def _closed_mm(xi, eta, eps):
    d = xi - eta
    lo = np.minimum(np.abs(d), np.abs(eta))
    hi = np.maximum(np.abs(d), np.abs(eta))
    aligned = 0.5 * np.abs(xi) * (eps * xi**2 + 3.0 * eps * d**2 + 3.0 * eps * eta**2 - 4.0)
    opposite = 0.5 * hi * (3.0 * eps * xi**2 + 3.0 * eps * lo**2 + eps * hi**2 - 4.0)
    return np.where(d * eta > 0, aligned, opposite)


def _closed_pm_eps(xi, eta, eps):
    # (+,-) closed form of the eps model, valid off the degenerate lines
    d = xi - eta
    lo2 = np.minimum(xi**2, eta**2)
    hi2 = np.maximum(xi**2, eta**2)
    anti = -3.0 * eps * np.abs(xi) * np.abs(d) * np.abs(eta)
    aligned = 0.5 * np.sqrt(lo2) * (3.0 * eps * d**2 + 3.0 * eps * hi2 + eps * lo2 - 4.0)
    return np.where(xi * eta < 0, anti, aligned)


def phase_closed(spec: PhaseSpec, xi, eta):
    """Case-split closed forms; degenerate points fall back to phase_direct.

    Unit model: the (+,+) and (-,-) forms are primary and
    Phi_{-,+}(xi,eta) = -Phi_{+,+}(eta,xi),
    Phi_{+,-}(xi,eta) = -Phi_{+,+}(eta-xi,eta).
    Eps model: (+,-) and (-,-) are primary and
    Phi_{+,+}(xi,eta) = -Phi_{+,-}(eta-xi,eta),
    Phi_{-,+}(xi,eta) = Phi_{+,-}(xi-eta,xi).
    """
    scalar = np.ndim(xi) == 0 and np.ndim(eta) == 0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    xi, eta = np.broadcast_arrays(xi, eta)
    eps = spec.model.cubic_coefficient
    key = (spec.mu, spec.nu)
    if spec.model.kind == "unit":
        if key == (1, 1):
            out = _closed_pp(xi, eta, eps)
        elif key == (-1, -1):
            out = _closed_mm(xi, eta, eps)
        elif key == (-1, 1):
            out = -_closed_pp(eta, xi, eps)
        else:  # (+,-)
            out = -_closed_pp(eta - xi, eta, eps)
    else:
        if key == (1, -1):
            out = _closed_pm_eps(xi, eta, eps)
        elif key == (-1, -1):
            out = _closed_mm(xi, eta, eps)
        elif key == (1, 1):
            out = -_closed_pm_eps(eta - xi, eta, eps)
        else:  # (-,+)
            out = _closed_pm_eps(xi - eta, xi, eps)
    bad = degenerate_mask(xi, eta)
    if np.any(bad):
        out = np.where(bad, phase_direct(spec, xi, eta), out)
    return float(out.reshape(-1)[0]) if scalar else out


# ---------------------------------------------------------------------------
# reduced modulation quadratics

MODULATION_TAGS = ("pp_opposite", "pm_aligned", "pp_opposite_eps", "pm_aligned_eps")


def _require_eps(tag: str, eps: float | None) -> float:
    if eps is None:
        raise ConfigurationError(f"modulation kind {tag!r} requires eps")
    return float(eps)


def modulation_value(tag: str, xi, eta, eps: float | None = None):
    """Reduced quadratic factor of the phase on its branch region.

    pp_opposite:      xi^2 + eta^2 - xi*eta/2 - 1
    pm_aligned:       eta^2 - (3/2) xi*eta + (3/2) xi^2 - 1
    pp_opposite_eps:  eps*(xi^2 + eta^2 - xi*eta/2) - 1
    pm_aligned_eps:   6 eps xi^2 - 6 eps xi eta + 4 eps eta^2 - 4   (|xi| > |eta|)
                      6 eps eta^2 - 6 eps xi eta + 4 eps xi^2 - 4   (|xi| < |eta|)
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if tag == "pp_opposite":
        return xi**2 + eta**2 - 0.5 * xi * eta - 1.0
    if tag == "pm_aligned":
        return eta**2 - 1.5 * xi * eta + 1.5 * xi**2 - 1.0
    if tag == "pp_opposite_eps":
        e = _require_eps(tag, eps)
        return e * (xi**2 + eta**2 - 0.5 * xi * eta) - 1.0
    if tag == "pm_aligned_eps":
        e = _require_eps(tag, eps)
        outer = 6.0 * e * xi**2 - 6.0 * e * xi * eta + 4.0 * e * eta**2 - 4.0
        inner = 6.0 * e * eta**2 - 6.0 * e * xi * eta + 4.0 * e * xi**2 - 4.0
        return np.where(np.abs(xi) > np.abs(eta), outer, inner)
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


def modulation_prefactor(tag: str, xi, eta, eps: float | None = None):
    """Vanishing prefactor p with  Phi = p * modulation  on the branch region."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if tag in ("pp_opposite", "pp_opposite_eps"):
        return -2.0 * np.abs(xi - eta)
    if tag == "pm_aligned":
        return 2.0 * np.abs(eta)
    if tag == "pm_aligned_eps":
        return 0.5 * np.minimum(np.abs(xi), np.abs(eta))
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


def modulation_branch_mask(tag: str, xi, eta):
    """Region where the factorization Phi = prefactor * modulation holds."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if tag in ("pp_opposite", "pp_opposite_eps"):
        return ((xi - eta) * eta < 0) & (np.abs(xi - eta) <= np.abs(eta))
    if tag == "pm_aligned":
        return (xi * eta > 0) & (np.abs(xi) > np.abs(eta))
    if tag == "pm_aligned_eps":
        return xi * eta > 0
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


def modulation_phase_spec(tag: str, eps: float | None = None) -> PhaseSpec:
    if tag == "pp_opposite":
        return PhaseSpec(1, 1, UNIT)
    if tag == "pm_aligned":
        return PhaseSpec(1, -1, UNIT)
    if tag == "pp_opposite_eps":
        return PhaseSpec(1, 1, eps_model(_require_eps(tag, eps)))
    if tag == "pm_aligned_eps":
        return PhaseSpec(1, -1, eps_model(_require_eps(tag, eps)))
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


def cutoff_D(eps: float, exponent: float) -> int:
    """Dyadic modulation cutoff: floor(exponent * log2(1/eps)).

    Values within 1e-9 of an integer are snapped before flooring so that
    exact powers of two give the intended integer.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    y = exponent * log2(1.0 / eps)
    nearest = round(y)
    if abs(y - nearest) < 1e-9:
        y = nearest
    return int(floor(y))


# ---------------------------------------------------------------------------
# small-modulation set measures


@dataclass(frozen=True)
class RatioRegion:
    """{(xi, eta) : eta in [eta_lo, eta_hi], xi/eta in [ratio_lo, ratio_hi]}."""

    eta_lo: float
    eta_hi: float
    ratio_lo: float
    ratio_hi: float


def region_s_plus() -> RatioRegion:
    return RatioRegion(0.25, 2.0**6, 31.0 / 32.0, 1.0)


def region_s_gt() -> RatioRegion:
    return RatioRegion(0.25, 2.0**6, 1.0, 33.0 / 32.0)


def region_s_eps_gt_plus(eps: float) -> RatioRegion:
    root = np.sqrt(eps)
    return RatioRegion(0.25 / root, 2.0**6 / root, 1.0, 33.0 / 32.0)


def _fiber_quadratic(tag: str, eta: np.ndarray, eps: float | None, outer_branch: bool):
    # coefficients (a, b, c) of the modulation as a quadratic in xi
    if tag == "pp_opposite":
        return np.ones_like(eta), -0.5 * eta, eta**2 - 1.0
    if tag == "pm_aligned":
        return np.full_like(eta, 1.5), -1.5 * eta, eta**2 - 1.0
    if tag == "pp_opposite_eps":
        e = _require_eps(tag, eps)
        return np.full_like(eta, e), -0.5 * e * eta, e * eta**2 - 1.0
    if tag == "pm_aligned_eps":
        e = _require_eps(tag, eps)
        if outer_branch:
            return np.full_like(eta, 6.0 * e), -6.0 * e * eta, 4.0 * e * eta**2 - 4.0
        return np.full_like(eta, 4.0 * e), -6.0 * e * eta, 6.0 * e * eta**2 - 4.0
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


def _sublevel_interval(a, b, c, tau):
    # roots of a*xi^2 + b*xi + (c - tau) = 0; empty interval when disc < 0
    disc = b**2 - 4.0 * a * (c - tau)
    ok = disc > 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    lo = (-b - sq) / (2.0 * a)
    hi = (-b + sq) / (2.0 * a)
    return np.where(ok, lo, np.inf), np.where(ok, hi, -np.inf)


def _overlap(lo1, hi1, lo2, hi2):
    return np.maximum(0.0, np.minimum(hi1, hi2) - np.maximum(lo1, lo2))


def _fiber_lengths(tag, eta, lo, hi, tau, eps):
    # |{xi in [lo, hi] : |phi(xi, eta)| <= tau}| exactly per fiber; for
    # pm_aligned_eps the ratio regions used here have xi/eta >= 1, which
    # pins the |xi| > |eta| branch
    a, b, c = _fiber_quadratic(tag, eta, eps, outer_branch=True)
    lo1, hi1 = _sublevel_interval(a, b, c, tau)  # {phi <= tau}
    lo2, hi2 = _sublevel_interval(a, b, c, -tau)  # {phi <= -tau}
    return _overlap(lo, hi, lo1, hi1) - _overlap(lo, hi, lo2, hi2)


def small_modulation_measure(
    tag: str,
    D: int,
    region: RatioRegion,
    eps: float | None = None,
    min_resolution: int = 2**15,
    initial_resolution: int = 2048,
    rel_tol: float = 0.01,
    max_resolution: int = 2**21,
) -> float:
    """Area of {|modulation| <= 2^-D} inside the region.

    Midpoint quadrature in eta with the exact xi-fiber length per node
    (the modulation is quadratic in xi), doubling the resolution until
    the value changes by less than rel_tol.  The fiber-exact rule
    replaces a plain 2D midpoint rule, which cannot resolve the
    O(2^-D)-thin level bands at the required D.
    """
    if region.eta_hi <= region.eta_lo:
        return 0.0
    tau = 2.0 ** (-D)
    resolution = max(int(initial_resolution), 2)
    previous = None
    while True:
        h = (region.eta_hi - region.eta_lo) / resolution
        eta = region.eta_lo + h * (np.arange(resolution) + 0.5)
        a = region.ratio_lo * eta
        b = region.ratio_hi * eta
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        value = float(h * np.sum(_fiber_lengths(tag, eta, lo, hi, tau, eps)))
        converged = (
            previous is not None
            and abs(value - previous) <= rel_tol * max(abs(value), 1e-300)
        )
        if (converged and resolution >= min_resolution) or resolution >= max_resolution:
            return value
        previous = value
        resolution *= 2


def jacobian_psi(tag: str, xi, eta, eps: float | None = None):
    """Jacobian of the straightening map (phi, eta) or (xi, phi).

    pp_opposite differentiates the modulation in xi: 2*xi - eta/2;
    pm_aligned in eta: 2*eta - (3/2)*xi; the eps variants carry the eps
    weights (pm_aligned_eps: eps*(12*xi - 6*eta) on the outer branch).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if tag == "pp_opposite":
        return 2.0 * xi - 0.5 * eta
    if tag == "pm_aligned":
        return 2.0 * eta - 1.5 * xi
    if tag == "pp_opposite_eps":
        e = _require_eps(tag, eps)
        return e * (2.0 * xi - 0.5 * eta)
    if tag == "pm_aligned_eps":
        e = _require_eps(tag, eps)
        return e * (12.0 * xi - 6.0 * eta)
    raise ConfigurationError(f"unknown modulation kind {tag!r}")


# ---------------------------------------------------------------------------
# abcd family linear analysis


def abcd_eigenvalues(a: float, b: float, c: float, d: float, eps: float, xi: float):
    """Nonzero eigenvalues of the linearization at rest, (lambda_+, lambda_-)."""
    xi2 = float(xi) ** 2
    denom = (1.0 + eps * d * xi2) * (1.0 + eps * b * xi2)
    if denom == 0.0:
        raise DomainError("linearization denominator vanishes at this frequency")
    numer = (1.0 - eps * a * xi2) * (1.0 - eps * c * xi2)
    root = np.sqrt(complex(numer / denom))
    lam = 1j * abs(float(xi)) * root
    return lam, -lam


def wellposed_predicate(a: float, b: float, c: float, d: float) -> bool:
    """Linear well-posedness of the four-parameter family."""
    if a <= 0 and c <= 0 and b >= 0 and d >= 0:
        return True
    return a == c and a > 0 and b >= 0 and d >= 0
