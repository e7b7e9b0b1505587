"""Good-unknown transformation, quadratic symbol family, and the
symmetrized right-hand sides.

For a state (zeta, v) the modified velocity is u = v + w_B*B(zeta, v)
with the bilinear smoothing correction

    B(f, g)     = (1/2) T_f ( (1 + d_x^2)^-1 P_{>=6} g )          (unit)
    B_eps(f, g) = (1/2) T_f ( (1 + eps d_x^2)^-1
                              phi_{>=6}(sqrt(eps)|d_x|) g )        (eps)

and w_B = 1 (unit) or eps.  The complex combination V = zeta +
i (d_x/|d_x|) u diagonalizes the linear flow, and the residual
machinery here verifies, in grid arithmetic, that the three
regroupings of the evolution of V (raw symmetrized form, and the
term-by-term quadratic/cubic/quartic decompositions) agree with the
time derivative computed directly from the PDE.

All quadratic operations are dealiased with the 2/3 rule; the algebraic
identities are exact on band-limited zero-mean states, so the residuals
sit at roundoff level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .cutoffs import (
    _para_spectrum,
    _remainder_spectrum,
    paraproduct_weight,
    phi_geq,
    phi_leq,
    remainder_weight,
    shell_range,
)
from .errors import ConfigurationError, ContractionError, NumericalError
from .phases import Model, PhaseSpec, UNIT, lambda_dispersion, phase_direct
from .spectral import (
    ComplexField,
    Grid1D,
    RealField,
    _check_same_grid,
    dealias_spectrum,
    linf_norm,
    random_real_field,
    sobolev_norm,
)

__all__ = [
    "StateZV",
    "GoodState",
    "ProfilePair",
    "SymbolKernel",
    "make_state",
    "random_state",
    "b_bilinear",
    "good_forward",
    "good_inverse",
    "profile_shift",
    "make_profile_pair",
    "symbol_eval",
    "symbol_kernel",
    "normal_form_kernel",
    "bilinear_apply",
    "assemble_symmetrized_rhs",
    "symmetrized_terms",
    "time_derivative_V",
    "decomposition_residual",
    "energy_functional",
    "profile_time_derivative_bound",
    "measured_b_constant",
    "ansatz_threshold",
    "conj_reflect",
    "weighted_real_inner",
]

SIGN_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


# ---------------------------------------------------------------------------
# model-dependent multiplier context


@dataclass(frozen=True)
class _ModelOps:
    """Per-(grid, model) multiplier arrays used by the assembly."""

    grid: Grid1D
    model: Model
    lam: np.ndarray  # Lambda_eps(xi) = |xi|(1 - eps_tilde xi^2)
    op13: np.ndarray  # (1 + eps_tilde d_x^2) d_x  =  i xi (1 - eps_tilde xi^2)
    dx: np.ndarray  # i xi
    sgn: np.ndarray  # sign(xi), sign(0) = 0
    absdx: np.ndarray
    low5: np.ndarray  # phi_{<=5}(kappa |xi|)
    high6: np.ndarray  # phi_{>=6}(kappa |xi|)
    inv_high6: np.ndarray  # (1 + eps_tilde d_x^2)^-1 restricted to the high6 band
    nl_weight: float  # weight of the quadratic terms (1 or eps)
    b_weight: float  # weight of the B correction in u (1 or eps)

    @property
    def iA(self) -> np.ndarray:
        # i * (d_x/|d_x|) as a spectral factor: i * (i sign xi) = -sign xi
        return -self.sgn


@lru_cache(maxsize=32)
def _model_ops(grid: Grid1D, model: Model) -> _ModelOps:
    xi = grid.xi
    et = model.cubic_coefficient
    kappa = 1.0 if model.kind == "unit" else np.sqrt(model.eps)
    low5 = phi_leq(5, kappa * np.abs(xi))
    high6 = phi_geq(6, kappa * np.abs(xi))
    denom = 1.0 - et * xi**2
    inv_high6 = np.where(high6 != 0.0, high6 / np.where(denom != 0.0, denom, 1.0), 0.0)
    return _ModelOps(
        grid=grid,
        model=model,
        lam=lambda_dispersion(xi, model),
        op13=1j * xi * denom,
        dx=1j * xi,
        sgn=np.sign(xi),
        absdx=np.abs(xi),
        low5=low5,
        high6=high6,
        inv_high6=inv_high6,
        nl_weight=1.0 if model.kind == "unit" else model.eps,
        b_weight=1.0 if model.kind == "unit" else model.eps,
    )


# ---------------------------------------------------------------------------
# states


def _check_zero_mean(u: RealField, name: str) -> None:
    c = u.spectrum
    scale = max(float(np.max(np.abs(c))), 1e-300)
    if abs(c[u.grid.index_of_mode_zero()]) > 1e-12 * scale:
        raise ConfigurationError(f"{name} must have zero mean")


@dataclass(frozen=True)
class StateZV:
    """A (zeta, v) pair solving one of the Boussinesq systems."""

    zeta: RealField
    v: RealField
    model: Model = UNIT

    def __post_init__(self):
        _check_same_grid(self.zeta, self.v)

    @property
    def grid(self) -> Grid1D:
        return self.zeta.grid


@dataclass(frozen=True)
class GoodState:
    """Derived unknowns: u = v + w_B*B(zeta, v), V = zeta + i(dx/|dx|)u."""

    zeta: RealField
    u: RealField
    V: ComplexField
    b_field: RealField


@dataclass(frozen=True)
class ProfilePair:
    """Profile f = exp(-it*Lambda)V and its weighted version g = <dx>^N0 f."""

    f: ComplexField
    g: ComplexField
    t: float
    n0: int


def make_state(zeta: RealField, v: RealField, model: Model = UNIT) -> StateZV:
    _check_zero_mean(zeta, "zeta")
    _check_zero_mean(v, "v")
    return StateZV(zeta, v, model)


def random_state(
    grid: Grid1D,
    rng: np.random.Generator,
    model: Model = UNIT,
    amplitude: float = 0.05,
    decay: float = 3.0,
) -> StateZV:
    """Random admissible state: zero-mean, band-limited, small amplitude."""
    zeta = random_real_field(grid, rng, amplitude=amplitude, decay=decay)
    v = random_real_field(grid, rng, amplitude=amplitude, decay=decay)
    return StateZV(zeta, v, model)


# ---------------------------------------------------------------------------
# spectrum-level primitives


def _prod_spectrum(grid: Grid1D, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    prod = grid.inverse(fc) * grid.inverse(gc)
    return dealias_spectrum(grid, grid.forward(prod))


def _comm_dx2_para(ops: _ModelOps, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    # [d_x^2, T_f] g evaluated as d_x^2 (T_f g) - T_f (d_x^2 g)
    grid = ops.grid
    dx2 = ops.dx**2
    return dx2 * _para_spectrum(grid, fc, gc) - _para_spectrum(grid, fc, dx2 * gc)


def _b_spectrum(ops: _ModelOps, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    return 0.5 * _para_spectrum(ops.grid, fc, ops.inv_high6 * gc)


def conj_reflect(coeffs: np.ndarray) -> np.ndarray:
    """Spectrum of the complex conjugate: c_bar(xi) = conj(c(-xi)).

    The unpaired Nyquist entry has no reflected partner and is zeroed
    (it is already zero on dealiased data).
    """
    out = np.empty_like(coeffs)
    out[1:] = np.conj(coeffs[1:][::-1])
    out[0] = 0.0
    return out


# ---------------------------------------------------------------------------
# B, good unknowns, profiles


def b_bilinear(f: RealField, g: RealField, model: Model = UNIT) -> RealField:
    """The smoothing bilinear correction B(f, g) (or B_eps for the eps model).

    Output is real with conjugate-symmetric spectrum, supported in the
    high-frequency band of the masked inverse.
    """
    grid = _check_same_grid(f, g)
    _check_zero_mean(f, "f")
    _check_zero_mean(g, "g")
    ops = _model_ops(grid, model)
    coeffs = _b_spectrum(ops, f.spectrum, g.spectrum)
    return RealField(grid, grid.inverse(coeffs).real, zero_mean=True)


def good_forward(state: StateZV, n0: int = 4) -> GoodState:
    """Build (zeta, u, V) from (zeta, v); u = v + w_B * B(zeta, v)."""
    grid = state.grid
    ops = _model_ops(grid, state.model)
    bc = _b_spectrum(ops, state.zeta.spectrum, state.v.spectrum)
    uc = state.v.spectrum + ops.b_weight * bc
    vc_good = state.zeta.spectrum - ops.sgn * uc
    b_field = RealField(grid, grid.inverse(bc).real, zero_mean=True)
    u = RealField(grid, grid.inverse(uc).real, zero_mean=True)
    return GoodState(state.zeta, u, ComplexField(grid, vc_good), b_field)


def good_inverse(
    zeta: RealField,
    u: RealField,
    model: Model = UNIT,
    tol: float = 1e-13,
    max_iterations: int = 100,
) -> RealField:
    """Recover v from (zeta, u) by the fixed point v <- u - w_B*B(zeta, v)."""
    grid = _check_same_grid(zeta, u)
    ops = _model_ops(grid, model)
    zc = zeta.spectrum
    vc = u.spectrum.copy()
    scale = max(float(np.linalg.norm(u.spectrum)), 1e-300)
    previous_step = None
    for _ in range(max_iterations):
        new = u.spectrum - ops.b_weight * _b_spectrum(ops, zc, vc)
        step = float(np.linalg.norm(new - vc))
        if previous_step is not None and previous_step > 0:
            factor = step / previous_step
            if factor >= 1.0 and step > tol * scale:
                raise ContractionError(
                    "good-unknown inversion is not contracting; the amplitude "
                    f"threshold is violated (measured factor {factor:.3g})",
                    contraction_factor=factor,
                )
        vc = new
        if step <= tol * scale:
            break
        previous_step = step
    return RealField(grid, grid.inverse(vc).real, zero_mean=True)


def profile_shift(
    V: ComplexField, t: float, model: Model = UNIT, direction: str = "to_profile"
) -> ComplexField:
    """Remove (to_profile) or restore (from_profile) the linear oscillation."""
    ops = _model_ops(V.grid, model)
    if direction == "to_profile":
        factor = np.exp(-1j * t * ops.lam)
    elif direction == "from_profile":
        factor = np.exp(1j * t * ops.lam)
    else:
        raise ConfigurationError(f"unknown profile direction {direction!r}")
    return ComplexField(V.grid, factor * V.coefficients)


def make_profile_pair(V: ComplexField, t: float, model: Model = UNIT, n0: int = 4) -> ProfilePair:
    f = profile_shift(V, t, model, "to_profile")
    weights = (1.0 + V.grid.xi**2) ** (n0 / 2.0)
    g = ComplexField(V.grid, weights * f.coefficients)
    return ProfilePair(f, g, t, n0)


# ---------------------------------------------------------------------------
# quadratic symbols


def _bracket(x: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + x**2)


def _symbol_s(mu, nu, xi, eta, model, js):
    w = paraproduct_weight(xi - eta, eta, js)
    weight = 1.0 if model.kind == "unit" else model.eps
    return weight * 1j * (0.5 * mu * xi * np.sign(xi - eta) + 0.25 * np.abs(xi)) * w


def _symbol_q(mu, nu, xi, eta, model, js):
    if nu == 1:
        return np.zeros(np.broadcast(xi, eta).shape, dtype=complex)
    kappa = 1.0 if model.kind == "unit" else np.sqrt(model.eps)
    weight = 1.0 if model.kind == "unit" else model.eps
    w = paraproduct_weight(xi - eta, eta, js)
    return -weight * 0.25j * np.abs(xi) * phi_leq(5, kappa * np.abs(eta)) * w


def _symbol_r(mu, nu, xi, eta, model, js):
    if model.kind != "unit":
        raise ConfigurationError("the r family belongs to the unit model")
    w = paraproduct_weight(xi - eta, eta, js)
    mask = phi_geq(6, np.abs(eta)) * w
    denom = 1.0 - eta**2
    safe = np.where(mask != 0.0, np.where(denom != 0.0, denom, 1.0), 1.0)
    inv = np.where(mask != 0.0, 1.0 / safe, 0.0)
    body = (
        nu * (xi**2 - eta**2) * inv * np.abs(xi)
        - (xi - eta) * np.sign(xi)
        + mu * nu * (1.0 - (xi - eta) ** 2) * np.abs(xi - eta) * inv
    )
    return 0.125j * body * mask


def _symbol_m(mu, nu, xi, eta, model, js):
    if model.kind != "unit":
        raise ConfigurationError("the m family belongs to the unit model")
    w = remainder_weight(xi - eta, eta, js)
    body = 2.0 * nu * xi * np.sign(eta) + mu * nu * np.abs(xi) * np.sign(xi - eta) * np.sign(eta)
    return 0.125j * body * w


def _symbol_q_heuristic(mu, nu, xi, eta, model):
    # quadratic symbol of the diagonalized system before good unknowns:
    # nonlinearity -d_x(zeta v) + (i/2)|d_x| v^2 expressed in V^mu, V^nu
    weight = 1.0 if model.kind == "unit" else model.eps
    return (
        weight
        * 0.25j
        * (nu * xi * np.sign(eta) + 0.5 * mu * nu * np.abs(xi) * np.sign(xi - eta) * np.sign(eta))
    )


_BASE_FAMILIES = {"s": _symbol_s, "q": _symbol_q, "r": _symbol_r, "m": _symbol_m}


def symbol_eval(
    family: str,
    mu: int,
    nu: int,
    xi,
    eta,
    n0: int = 4,
    model: Model = UNIT,
    D: int | None = None,
    js=None,
):
    """Evaluate one quadratic symbol at (xi, eta).

    Families: "s", "q", "r", "m" and their "_tilde" Sobolev-weighted
    versions, "q_heuristic" (pre-symmetrization quadratic symbol), and
    "a" (normal-form symbol -q_heuristic/(i*Phi) masked to the good
    frequency set |Phi| >= max(2^-D, 1e-8); masked-out points evaluate
    to 0).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if family in _BASE_FAMILIES:
        if family == "s" and nu != 1:
            raise ConfigurationError("the s family pairs with nu = +1")
        return _BASE_FAMILIES[family](mu, nu, xi, eta, model, js)
    if family == "q_heuristic":
        return _symbol_q_heuristic(mu, nu, xi, eta, model)
    if family == "a":
        if D is None:
            raise ConfigurationError("the normal-form symbol requires the cutoff D")
        phase = phase_direct(PhaseSpec(mu, nu, model), xi, eta)
        good = np.abs(phase) >= max(2.0 ** (-D), 1e-8)
        q = _symbol_q_heuristic(mu, nu, xi, eta, model)
        return np.where(good, -q / np.where(good, 1j * phase, 1.0), 0.0 + 0.0j)
    if family.endswith("_tilde"):
        base = family[: -len("_tilde")]
        if base == "s":
            plain = symbol_eval("s", mu, 1, xi, eta, n0, model, js=js)
            swapped = symbol_eval("s", -mu, 1, eta, xi, n0, model, js=js)
            bx, be = _bracket(xi), _bracket(eta)
            return bx ** (-n0) * be ** (-n0) * (bx ** (2 * n0) * plain - be ** (2 * n0) * swapped)
        if base in ("q", "r", "m"):
            plain = symbol_eval(base, mu, nu, xi, eta, n0, model, js=js)
            return _bracket(xi) ** n0 * _bracket(eta) ** (-n0) * plain
    raise ConfigurationError(f"unknown symbol family {family!r}")


@dataclass(frozen=True)
class SymbolKernel:
    """Scalar kernel of (xi, eta) for bilinear pseudo-product operators."""

    evaluator: Callable = field(repr=False)
    label: str = ""
    mask: Callable | None = field(default=None, repr=False)


def symbol_kernel(
    family: str, mu: int, nu: int, n0: int = 4, model: Model = UNIT, D: int | None = None
) -> SymbolKernel:
    label = f"{family}[{mu:+d}{nu:+d}]N{n0}-{model.kind}-{model.eps}-D{D}"

    def evaluator(xi, eta, js=None):
        return symbol_eval(family, mu, nu, xi, eta, n0=n0, model=model, D=D, js=js)

    mask = None
    if family == "a":

        def mask(xi, eta):
            phase = phase_direct(PhaseSpec(mu, nu, model), xi, eta)
            return np.abs(phase) >= max(2.0 ** (-D), 1e-8)

    return SymbolKernel(evaluator, label, mask)


def normal_form_kernel(mu: int, nu: int, D: int, model: Model = UNIT) -> SymbolKernel:
    return symbol_kernel("a", mu, nu, model=model, D=D)


# ---------------------------------------------------------------------------
# O(n^2) bilinear pseudo-product application


@lru_cache(maxsize=8)
def _shift_index(grid: Grid1D):
    n = grid.n
    idx = np.arange(n)[:, None] - np.arange(n)[None, :] + grid.index_of_mode_zero()
    valid = (idx >= 0) & (idx < n)
    return np.where(valid, idx, 0), valid


_KERNEL_MATRIX_CACHE: dict = {}


def _kernel_matrix(grid: Grid1D, kernel: SymbolKernel) -> np.ndarray:
    key = (grid.n, grid.half_length, kernel.label)
    if kernel.label and key in _KERNEL_MATRIX_CACHE:
        return _KERNEL_MATRIX_CACHE[key]
    xi = grid.xi[:, None]
    eta = grid.xi[None, :]
    try:
        matrix = np.asarray(kernel.evaluator(xi, eta, js=shell_range(grid)), dtype=complex)
    except TypeError:
        matrix = np.asarray(kernel.evaluator(xi, eta), dtype=complex)
    if kernel.mask is not None:
        matrix = np.where(kernel.mask(xi, eta), matrix, 0.0)
    if kernel.label:
        _KERNEL_MATRIX_CACHE[key] = matrix
    return matrix


def bilinear_apply(kernel: SymbolKernel, F: ComplexField, G: ComplexField) -> ComplexField:
    """Direct O(n^2) pseudo-product:

        h_hat(xi_j) = (dxi/2pi) * sum_k kernel(xi_j, xi_k)
                      F_hat(xi_j - xi_k) G_hat(xi_k)

    Out-of-range shifted modes are treated as zero (no wraparound), which
    matches the continuum convolution on band-limited data; the output is
    dealiased.
    """
    grid = _check_same_grid(F, G)
    K = _kernel_matrix(grid, kernel)
    idx, valid = _shift_index(grid)
    shifted = np.where(valid, F.spectrum[idx], 0.0)
    out = grid.l2_weight * ((K * shifted) @ G.spectrum)
    return ComplexField(grid, dealias_spectrum(grid, out))


def _apply_kernel_spectra(grid, kernel, fc, gc):
    K = _kernel_matrix(grid, kernel)
    idx, valid = _shift_index(grid)
    shifted = np.where(valid, fc[idx], 0.0)
    return dealias_spectrum(grid, grid.l2_weight * ((K * shifted) @ gc))


# ---------------------------------------------------------------------------
# assembled right-hand sides and residuals


def _pde_time_derivatives(ops: _ModelOps, zc: np.ndarray, vc: np.ndarray):
    grid = ops.grid
    w = ops.nl_weight
    dz = -ops.op13 * vc - w * ops.dx * _prod_spectrum(grid, zc, vc)
    dv = -ops.op13 * zc - 0.5 * w * ops.dx * _prod_spectrum(grid, vc, vc)
    return dz, dv


def time_derivative_V(state: StateZV) -> ComplexField:
    """d/dt V from the PDE, pushed through the bilinearity of B."""
    ops = _model_ops(state.grid, state.model)
    zc, vc = state.zeta.spectrum, state.v.spectrum
    dz, dv = _pde_time_derivatives(ops, zc, vc)
    du = dv + ops.b_weight * (_b_spectrum(ops, dz, vc) + _b_spectrum(ops, zc, dv))
    return ComplexField(state.grid, dz - ops.sgn * du)


def _n_zeta_terms(ops, zc, vc, uc, bc, include_q_part: bool):
    grid = ops.grid
    w, wb = ops.nl_weight, ops.b_weight
    para = lambda f, g: _para_spectrum(grid, f, g)
    terms = []
    if include_q_part:
        terms.append(-0.5 * w * ops.dx * para(zc, ops.low5 * uc))
    terms.append(-0.5 * w * wb * ops.dx * para(zc, ops.high6 * bc))
    terms.append(w * wb * ops.dx * para(zc, bc))
    terms.append(0.5 * w * wb * ops.dx * _comm_dx2_para(ops, zc, ops.inv_high6 * vc))
    terms.append(-w * ops.dx * _remainder_spectrum(grid, zc, vc))
    return sum(terms)


def _n_u_terms(ops, zc, vc, bc, dz, include_q_part: bool):
    grid = ops.grid
    w, wb = ops.nl_weight, ops.b_weight
    para = lambda f, g: _para_spectrum(grid, f, g)
    terms = []
    if include_q_part:
        terms.append(0.5 * w * ops.dx * para(zc, ops.low5 * zc))
    terms.append(0.5 * w * para(ops.dx * zc, ops.high6 * zc))
    terms.append(w * wb * ops.dx * para(vc, bc))
    terms.append(-0.5 * w * ops.dx * _remainder_spectrum(grid, vc, vc))
    terms.append(wb * _b_spectrum(ops, dz, vc))
    terms.append(-0.5 * w * wb * _b_spectrum(ops, zc, ops.dx * _prod_spectrum(grid, vc, vc)))
    return sum(terms)


def _raw_terms(state: StateZV, n0: int) -> dict:
    ops = _model_ops(state.grid, state.model)
    grid = state.grid
    zc, vc = state.zeta.spectrum, state.v.spectrum
    bc = _b_spectrum(ops, zc, vc)
    uc = vc + ops.b_weight * bc
    Vc = zc - ops.sgn * uc
    dz, _ = _pde_time_derivatives(ops, zc, vc)
    w = ops.nl_weight
    return {
        "transport": -w * ops.dx * _para_spectrum(grid, vc, Vc),
        "symmetrizer": 0.5j * w * ops.absdx * _para_spectrum(grid, zc, Vc),
        "n_zeta": _n_zeta_terms(ops, zc, vc, uc, bc, include_q_part=True),
        "ia_n_u": ops.iA * _n_u_terms(ops, zc, vc, bc, dz, include_q_part=True),
    }


def _quadratic_symbol_terms(state: StateZV, n0: int, families) -> dict:
    grid = state.grid
    ops = _model_ops(grid, state.model)
    zc, vc = state.zeta.spectrum, state.v.spectrum
    bc = _b_spectrum(ops, zc, vc)
    uc = vc + ops.b_weight * bc
    Vc = zc - ops.sgn * uc
    V = {1: Vc, -1: conj_reflect(Vc)}
    out = {}
    for family in families:
        total = np.zeros(grid.n, dtype=complex)
        for mu, nu in SIGN_PAIRS:
            if family == "s" and nu != 1:
                continue
            if family == "q" and nu != -1:
                continue
            kernel = symbol_kernel(family, mu, nu, n0=n0, model=state.model)
            total = total + _apply_kernel_spectra(grid, kernel, V[mu], V[nu])
        out[family.upper()] = total
    return out


def _cubic_quartic_terms(state: StateZV) -> dict:
    ops = _model_ops(state.grid, state.model)
    grid = state.grid
    zc, vc = state.zeta.spectrum, state.v.spectrum
    bc = _b_spectrum(ops, zc, vc)
    uc = vc + ops.b_weight * bc
    Vc = zc - ops.sgn * uc
    dz, _ = _pde_time_derivatives(ops, zc, vc)
    w, wb = ops.nl_weight, ops.b_weight
    para = lambda f, g: _para_spectrum(grid, f, g)
    rem = lambda f, g: _remainder_spectrum(grid, f, g)
    b = lambda f, g: _b_spectrum(ops, f, g)
    L = w * wb * ops.dx * para(bc, Vc)
    if state.model.kind == "unit":
        C = (
            ops.dx * para(zc, bc)
            - 0.5 * ops.dx * para(zc, ops.high6 * bc)
            - 0.5 * ops.dx * _comm_dx2_para(ops, zc, ops.inv_high6 * bc)
            - 1j * ops.absdx * para(vc, bc)
            + ops.iA * b(ops.op13 * vc, bc)
            + ops.iA * b(ops.op13 * bc, vc)
            - ops.iA * b(ops.dx * _prod_spectrum(grid, zc, vc), vc)
            + ops.dx * rem(zc, bc)
            - 0.5j * ops.absdx * rem(vc, bc)
            - 0.5j * ops.absdx * rem(bc, vc)
            - 0.5 * ops.iA * b(zc, ops.dx * _prod_spectrum(grid, vc, vc))
        )
        N = ops.iA * b(ops.op13 * bc, bc) - 0.5j * ops.absdx * rem(bc, bc)
        return {"L": L, "C": C, "N": N}
    # eps model: everything beyond S, Q, L is lumped into one remainder
    # term (L splits off the transport para-product, not this remainder)
    n_rest = _n_zeta_terms(ops, zc, vc, uc, bc, include_q_part=False) + ops.iA * _n_u_terms(
        ops, zc, vc, bc, dz, include_q_part=False
    )
    return {"L": L, "N": n_rest}


def symmetrized_terms(state: StateZV, n0: int = 4, grouping: str = "raw_new_bsq") -> dict:
    """Named spectra of the right-hand side in the requested grouping.

    raw_new_bsq: transport/symmetrizer para-products plus the remainder
    blocks exactly as in the symmetrized system.  prop31 (unit model):
    quadratic S/Q/R/M via their symbol kernels plus cubic L, C and
    quartic N operator blocks.  prop51 (eps model): S/Q via symbols,
    cubic L, and the lumped remainder N.
    """
    _check_ansatz(state)
    if grouping == "raw_new_bsq":
        return _raw_terms(state, n0)
    if grouping == "prop31":
        if state.model.kind != "unit":
            raise ConfigurationError("prop31 grouping applies to the unit model")
        out = _quadratic_symbol_terms(state, n0, ("s", "q", "r", "m"))
        out.update(_cubic_quartic_terms(state))
        return out
    if grouping == "prop51":
        if state.model.kind != "eps":
            raise ConfigurationError("prop51 grouping applies to the eps model")
        out = _quadratic_symbol_terms(state, n0, ("s", "q"))
        out.update(_cubic_quartic_terms(state))
        return out
    raise ConfigurationError(f"unknown grouping {grouping!r}")


def assemble_symmetrized_rhs(state: StateZV, n0: int = 4) -> ComplexField:
    """Sum of the raw symmetrized right-hand side (excluding i*Lambda*V)."""
    terms = symmetrized_terms(state, n0, "raw_new_bsq")
    return ComplexField(state.grid, sum(terms.values()))


def decomposition_residual(state: StateZV, n0: int = 4, grouping: str = "raw_new_bsq") -> float:
    """Relative defect of d_t V - i Lambda V against the grouped right side."""
    ops = _model_ops(state.grid, state.model)
    dtv = time_derivative_V(state).coefficients
    good = good_forward(state, n0)
    lhs = dtv - 1j * ops.lam * good.V.coefficients
    rhs = sum(symmetrized_terms(state, n0, grouping).values())
    denom = float(np.linalg.norm(lhs))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs)) / denom


def energy_functional(state: StateZV, n0: int = 4) -> tuple[float, float]:
    """E = |zeta|_{H^n0}^2 + |v|_{H^n0}^2 and the ratio |V|^2/E (1 at rest)."""
    energy = sobolev_norm(state.zeta, n0) ** 2 + sobolev_norm(state.v, n0) ** 2
    if energy == 0.0:
        return 0.0, 1.0
    good = good_forward(state, n0)
    return energy, sobolev_norm(good.V, n0) ** 2 / energy


def profile_time_derivative_bound(state: StateZV, t: float = 0.0, n0: int = 4) -> float:
    """|| |d_x|^-1 d_t f ||_{H^n0} for the profile f of V.

    The profile shift is unimodular, so the value does not depend on t;
    the 1/|xi| weight acts on zero-mean spectra (mean entry dropped).
    """
    ops = _model_ops(state.grid, state.model)
    good = good_forward(state, n0)
    nonlinear = time_derivative_V(state).coefficients - 1j * ops.lam * good.V.coefficients
    xi = state.grid.xi
    weighted = np.where(xi != 0.0, nonlinear / np.where(xi != 0.0, np.abs(xi), 1.0), 0.0)
    coeffs = np.exp(-1j * t * ops.lam) * weighted
    return sobolev_norm(ComplexField(state.grid, coeffs), n0)


def weighted_real_inner(grid: Grid1D, a: np.ndarray, b: np.ndarray, n0: int) -> float:
    """Re of the H^n0 pairing (<dx>^n0 a | <dx>^n0 b)_2 on spectra."""
    weights = (1.0 + grid.xi**2) ** n0
    return float(grid.l2_weight * np.sum(weights * (a * np.conj(b)).real))


# ---------------------------------------------------------------------------
# empirical constants and the amplitude ansatz


_B_CONSTANT_CACHE: dict = {}


def measured_b_constant(
    grid: Grid1D, model: Model = UNIT, n_samples: int = 40, seed: int = 20200917
) -> float:
    """Empirical operator constant of B on a fixed seeded ensemble.

    Unit model: sup over random pairs and s in {-2, 0, 2} of
    ||B(f,g)||_{H^{s+2}} / (|f|_inf ||g||_{H^s}).  Eps model: the same
    with the eps^(k/2)-weighted H^{s+k} family, k in {0, 1, 2}.
    """
    key = (grid.n, grid.half_length, model.kind, model.eps, n_samples, seed)
    if key in _B_CONSTANT_CACHE:
        return _B_CONSTANT_CACHE[key]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        f = random_real_field(grid, rng, amplitude=1.0, decay=1.0)
        g = random_real_field(grid, rng, amplitude=1.0, decay=1.0)
        bfg = b_bilinear(f, g, model)
        for s in (-2.0, 0.0, 2.0):
            gs = sobolev_norm(g, s)
            if gs == 0.0:
                continue
            if model.kind == "unit":
                ratios = [sobolev_norm(bfg, s + 2.0) / (linf_norm(f) * gs)]
            else:
                ratios = [
                    model.eps ** (k / 2.0) * sobolev_norm(bfg, s + k) / (linf_norm(f) * gs)
                    for k in (0, 1, 2)
                ]
            worst = max(worst, *ratios)
    _B_CONSTANT_CACHE[key] = worst
    return worst


def ansatz_threshold(grid: Grid1D, model: Model = UNIT) -> float:
    """Amplitude bound for the good-unknown machinery: 1/(2 C_B).

    For the eps model the bound applies to eps*|zeta|_inf.  Grids whose
    resolvable band misses the high-frequency mask have B = 0 and no
    constraint (infinite threshold).
    """
    c = measured_b_constant(grid, model)
    return np.inf if c == 0.0 else 1.0 / (2.0 * c)


def _check_ansatz(state: StateZV) -> None:
    ops = _model_ops(state.grid, state.model)
    threshold = ansatz_threshold(state.grid, state.model)
    value = ops.b_weight * linf_norm(state.zeta)
    if value > threshold:
        raise NumericalError(
            f"amplitude ansatz violated: w_B*|zeta|_inf = {value:.3g} exceeds "
            f"1/(2 C_B) = {threshold:.3g}"
        )
