"""Periodic spectral discretization on [-L, L).

Grid, field containers, discrete Fourier transforms, Fourier multipliers,
and Sobolev/uniform norms.  Conventions:

* mode frequencies xi_j = j*pi/L for j = -n/2 .. n/2-1, stored in
  ascending order ("ordered" layout),
* the forward transform carries the quadrature weight dx, so discrete
  coefficients approximate the continuum transform of u; the inverse
  carries dxi/(2*pi),
* products are dealiased with the 2/3 rule, which also zeroes the
  unpaired Nyquist mode.

With these conventions d/dx has symbol i*xi and d_x/|d_x| has symbol
i*sign(xi) with sign(0) = 0 (mean modes are excluded by the zero-mean
invariant carried on fields).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, GridMismatchError

__all__ = [
    "Grid1D",
    "RealField",
    "ComplexField",
    "FourierMultiplier",
    "make_grid",
    "real_field",
    "complex_field",
    "transform",
    "apply_multiplier",
    "derivative_multiplier",
    "direction_multiplier",
    "abs_dx_multiplier",
    "bracket_power_multiplier",
    "multiplier_from_symbol",
    "sobolev_norm",
    "l2_norm",
    "linf_norm",
    "wkinf_norm",
    "norm",
    "dealias_and_mean",
    "dealias_spectrum",
    "integrate",
    "random_real_field",
]

DEALIAS_FRACTION = 2.0 / 3.0


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [-L, L) with 2/3-rule dealiasing."""

    n: int
    half_length: float

    @cached_property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @cached_property
    def dxi(self) -> float:
        return np.pi / self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n)

    @cached_property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n // 2, self.n // 2)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.modes * self.dxi

    @cached_property
    def xi_max(self) -> float:
        return (self.n // 2) * self.dxi

    @cached_property
    def dealias_cutoff(self) -> float:
        return DEALIAS_FRACTION * self.xi_max

    @cached_property
    def dealias_keep(self) -> np.ndarray:
        # strict inequality; for power-of-two n no mode sits exactly on the cutoff
        return np.abs(self.xi) < self.dealias_cutoff

    @cached_property
    def l2_weight(self) -> float:
        # Parseval weight: ||u||_{L2}^2 = l2_weight * sum |u_hat|^2
        return self.dxi / (2.0 * np.pi)

    @cached_property
    def _fwd_factor(self) -> np.ndarray:
        # dx * exp(-i*xi_j*x_0) with x_0 = -L reduces to dx * (-1)^j
        sign = np.where(self.modes % 2 == 0, 1.0, -1.0)
        return self.dx * sign

    def forward(self, samples: np.ndarray) -> np.ndarray:
        """Ordered spectral coefficients approximating the continuum transform."""
        return np.fft.fftshift(np.fft.fft(samples)) * self._fwd_factor

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Complex physical samples from ordered coefficients."""
        return np.fft.ifft(np.fft.ifftshift(coeffs / self._fwd_factor))

    def index_of_mode_zero(self) -> int:
        return self.n // 2


def make_grid(n: int, half_length: float) -> Grid1D:
    if not isinstance(n, (int, np.integer)) or not _is_power_of_two(int(n)) or n < 16:
        raise ConfigurationError(f"n_points must be a power of two >= 16, got {n!r}")
    if not half_length > 0:
        raise ConfigurationError(f"half_length must be positive, got {half_length!r}")
    return Grid1D(int(n), float(half_length))


@dataclass(frozen=True)
class RealField:
    """Real periodic grid function; spectrum is Hermitian-symmetric."""

    grid: Grid1D
    samples: np.ndarray = field(repr=False)
    zero_mean: bool = False

    @cached_property
    def spectrum(self) -> np.ndarray:
        return self.grid.forward(self.samples)


@dataclass(frozen=True)
class ComplexField:
    """Complex-valued function stored by its spectral coefficients."""

    grid: Grid1D
    coefficients: np.ndarray = field(repr=False)

    @cached_property
    def samples(self) -> np.ndarray:
        return self.grid.inverse(self.coefficients)

    @property
    def spectrum(self) -> np.ndarray:
        return self.coefficients


Field = RealField | ComplexField


def real_field(grid: Grid1D, samples: np.ndarray, zero_mean: bool = False) -> RealField:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n,):
        raise GridMismatchError(f"expected {grid.n} samples, got shape {samples.shape}")
    return RealField(grid, samples, zero_mean)


def complex_field(grid: Grid1D, coefficients: np.ndarray) -> ComplexField:
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != (grid.n,):
        raise GridMismatchError(
            f"expected {grid.n} coefficients, got shape {coefficients.shape}"
        )
    return ComplexField(grid, coefficients)


def _check_same_grid(*fields: Field) -> Grid1D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError("fields live on different grids")
    return grid


def hermitian_defect(grid: Grid1D, coeffs: np.ndarray) -> float:
    """Max |c(-xi) - conj(c(xi))| over paired modes (Nyquist excluded)."""
    c = coeffs[1:]
    return float(np.max(np.abs(c[::-1] - np.conj(c)))) if c.size else 0.0


def transform(u: Field, direction: str = "forward") -> Field:
    """Move between physical (RealField) and spectral (ComplexField) views.

    The inverse direction requires a Hermitian-symmetric spectrum; the
    recovered samples drop the O(eps) imaginary roundoff.
    """
    if direction == "forward":
        if isinstance(u, ComplexField):
            return u
        return ComplexField(u.grid, u.spectrum)
    if direction == "inverse":
        if isinstance(u, RealField):
            return u
        scale = max(float(np.max(np.abs(u.coefficients))), 1.0)
        if hermitian_defect(u.grid, u.coefficients) > 1e-10 * scale:
            raise ValueError("spectrum is not Hermitian-symmetric; no real inverse")
        return RealField(u.grid, u.samples.real)
    raise ConfigurationError(f"unknown transform direction {direction!r}")


@dataclass(frozen=True)
class FourierMultiplier:
    """Diagonal operator in frequency: (m u)^(xi_j) = symbol[j] * u^(xi_j)."""

    grid: Grid1D
    symbol_values: np.ndarray = field(repr=False)
    description: str = ""

    @cached_property
    def preserves_reality(self) -> bool:
        # symbol(-xi) == conj(symbol(xi)) maps real fields to real fields
        s = self.symbol_values
        paired = bool(np.allclose(s[1:][::-1], np.conj(s[1:]), atol=1e-15))
        return paired and abs(s[0].imag) < 1e-15


def multiplier_from_symbol(grid: Grid1D, fn, description: str = "") -> FourierMultiplier:
    values = np.asarray(fn(grid.xi), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise ConfigurationError(f"symbol {description!r} has nonfinite values")
    return FourierMultiplier(grid, values, description)


def derivative_multiplier(grid: Grid1D, order: int = 1) -> FourierMultiplier:
    symbol = (1j * grid.xi) ** order
    if order % 2 == 1:
        # the unpaired Nyquist mode has no conjugate partner; odd
        # derivatives zero it so real fields stay real
        symbol[0] = 0.0
    return FourierMultiplier(grid, symbol, f"d^{order}/dx^{order}")


def direction_multiplier(grid: Grid1D) -> FourierMultiplier:
    """d_x/|d_x| with symbol i*sign(xi), sign(0) = 0."""
    return multiplier_from_symbol(grid, lambda xi: 1j * np.sign(xi), "dx/|dx|")


def abs_dx_multiplier(grid: Grid1D) -> FourierMultiplier:
    return multiplier_from_symbol(grid, lambda xi: np.abs(xi) + 0j, "|dx|")


def bracket_power_multiplier(grid: Grid1D, s: float) -> FourierMultiplier:
    return multiplier_from_symbol(grid, lambda xi: (1.0 + xi**2) ** (s / 2.0) + 0j, f"<dx>^{s}")


def apply_multiplier(m: FourierMultiplier, u: Field) -> Field:
    if m.grid != u.grid:
        raise GridMismatchError("multiplier and field grids differ")
    coeffs = m.symbol_values * u.spectrum
    if isinstance(u, RealField) and m.preserves_reality:
        return RealField(u.grid, u.grid.inverse(coeffs).real, u.zero_mean)
    return ComplexField(u.grid, coeffs)


# ---------------------------------------------------------------------------
# norms


def _spectrum_and_grid(u: Field) -> tuple[Grid1D, np.ndarray]:
    return u.grid, u.spectrum


def sobolev_norm(u: Field, s: float) -> float:
    if s < -2:
        raise ConfigurationError(f"sobolev index must be >= -2, got {s}")
    grid, c = _spectrum_and_grid(u)
    weights = (1.0 + grid.xi**2) ** s
    return float(np.sqrt(grid.l2_weight * np.sum(weights * np.abs(c) ** 2)))


def l2_norm(u: Field) -> float:
    return sobolev_norm(u, 0.0)


def linf_norm(u: Field) -> float:
    return float(np.max(np.abs(u.samples)))


def wkinf_norm(u: Field, k: int) -> float:
    """W^{k,inf} norm: sum over m <= k of the sup norm of the m-th derivative."""
    if k < 0 or int(k) != k:
        raise ConfigurationError(f"wkinf order must be a nonnegative integer, got {k}")
    grid, c = _spectrum_and_grid(u)
    total = 0.0
    for m in range(int(k) + 1):
        dm = grid.inverse((1j * grid.xi) ** m * c)
        if isinstance(u, RealField):
            dm = dm.real
        total += float(np.max(np.abs(dm)))
    return total


def norm(u: Field, kind: str, order: float | int | None = None) -> float:
    if kind == "sobolev":
        return sobolev_norm(u, 0.0 if order is None else order)
    if kind == "l2":
        return l2_norm(u)
    if kind == "linf":
        return linf_norm(u)
    if kind == "wkinf":
        return wkinf_norm(u, 0 if order is None else int(order))
    raise ConfigurationError(f"unknown norm kind {kind!r}")


def integrate(u: RealField) -> float:
    """Trapezoid-exact periodic quadrature: dx * sum of samples."""
    return float(u.grid.dx * np.sum(u.samples))


# ---------------------------------------------------------------------------
# dealiasing and mean control


def dealias_spectrum(grid: Grid1D, coeffs: np.ndarray) -> np.ndarray:
    return np.where(grid.dealias_keep, coeffs, 0.0)


def dealias_and_mean(u: Field, enforce_zero_mean: bool = False) -> Field:
    """Apply the 2/3 rule; optionally zero the mean mode and set the flag."""
    grid = u.grid
    coeffs = dealias_spectrum(grid, u.spectrum.copy())
    if enforce_zero_mean:
        coeffs[grid.index_of_mode_zero()] = 0.0
    if isinstance(u, RealField):
        zero_mean = u.zero_mean or enforce_zero_mean
        return RealField(grid, grid.inverse(coeffs).real, zero_mean)
    return ComplexField(grid, coeffs)


# ---------------------------------------------------------------------------
# seeded random fields (shared by tests, verify, and empirical constants)


def random_real_field(
    grid: Grid1D,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    decay: float = 2.0,
    band_fraction: float = 1.0,
) -> RealField:
    """Random zero-mean band-limited real field with sup norm = amplitude.

    Coefficients are complex Gaussians damped by (1+|xi|)^(-decay),
    supported on |xi| < band_fraction * dealias_cutoff, Hermitian-
    symmetrized so the samples are exactly real.
    """
    xi = grid.xi
    envelope = (1.0 + np.abs(xi)) ** (-decay)
    raw = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    coeffs = raw * envelope
    coeffs[np.abs(xi) >= band_fraction * grid.dealias_cutoff] = 0.0
    coeffs[grid.index_of_mode_zero()] = 0.0
    # Hermitian part: c(xi) <- (c(xi) + conj(c(-xi)))/2, Nyquist dropped
    sym = coeffs.copy()
    sym[1:] = 0.5 * (coeffs[1:] + np.conj(coeffs[1:][::-1]))
    sym[0] = 0.0
    samples = grid.inverse(sym).real
    peak = float(np.max(np.abs(samples)))
    if peak > 0:
        samples = samples * (amplitude / peak)
    return RealField(grid, samples, zero_mean=True)
