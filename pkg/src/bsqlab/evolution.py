"""Time integration of the Boussinesq systems and their diagonal KdV form.

The linear flow is applied exactly: with lam_s(xi) = xi*(1 - eps*xi^2),
the coupled pair (zeta_hat, v_hat) evolves by the per-mode matrix

    [[cos(lam_s dt), -i sin(lam_s dt)],
     [-i sin(lam_s dt), cos(lam_s dt)]]

and the diagonal form (u, w) by exp(-i lam_s dt), exp(+i lam_s dt).
The nonlinearity is advanced with the integrating-factor (Lawson) RK4
scheme wrapped around these exact propagators, so linear runs are exact
and there is no phi-function cancellation at the zeros of lam_s.

Quadratic products are dealiased with the 2/3 rule; all right-hand
sides are perfect x-derivatives, so the zero modes (masses) are
conserved identically.
"""

from __future__ import annotations

import dataclasses
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UnusableInputError
from .goodvars import StateZV
from .phases import Model, UNIT, eps_model
from .spectral import Grid1D, RealField, dealias_spectrum, sobolev_norm

__all__ = [
    "SystemKind",
    "IntegratorSpec",
    "ExitStatus",
    "Trajectory",
    "bsq_unit",
    "bsq_eps",
    "kdv_diag",
    "linear_propagator",
    "nonlinear_rhs",
    "step",
    "simulate",
    "conserved_quantities",
    "diag_change_of_variables",
    "diag_to_state",
    "default_dt",
    "gaussian_pair",
    "random_multibump_pair",
    "scale_to_energy",
    "trajectory_to_csv",
    "save_state_dump",
    "load_state_dump",
]


@dataclass(frozen=True)
class SystemKind:
    """One of the simulated systems: bsq_unit, bsq_eps(eps), kdv_diag(eps)."""

    tag: str
    eps: float = 1.0

    def __post_init__(self):
        if self.tag not in ("bsq_unit", "bsq_eps", "kdv_diag"):
            raise ConfigurationError(f"unknown system tag {self.tag!r}")
        if not 0.0 < self.eps <= 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")

    @property
    def model(self) -> Model:
        return UNIT if self.tag == "bsq_unit" else eps_model(self.eps)

    @property
    def dispersion_eps(self) -> float:
        return 1.0 if self.tag == "bsq_unit" else self.eps


def bsq_unit() -> SystemKind:
    return SystemKind("bsq_unit", 1.0)


def bsq_eps(eps: float) -> SystemKind:
    return SystemKind("bsq_eps", float(eps))


def kdv_diag(eps: float) -> SystemKind:
    return SystemKind("kdv_diag", float(eps))


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "lawson_rk4"
    dt: float = 1e-2
    dealias: bool = True
    exit_norm_factor: float = 2.0
    exit_sobolev_index: int = 4
    include_nonlinear: bool = True  # False runs the exact linear flow only

    def __post_init__(self):
        if self.scheme != "lawson_rk4":
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        # negative dt is allowed for explicit backward stepping (time-
        # reversal checks); simulate() itself requires dt > 0
        if self.dt == 0:
            raise ConfigurationError("dt must be nonzero")
        if self.exit_norm_factor <= 1:
            raise ConfigurationError("exit_norm_factor must exceed 1")


@dataclass(frozen=True)
class ExitStatus:
    kind: str  # completed | norm_doubled | nonfinite
    time: float


@dataclass
class Trajectory:
    """Sampled diagnostics (and optionally states) of one simulation."""

    system: SystemKind
    grid: Grid1D
    n0: int
    times: np.ndarray
    e_n0: np.ndarray
    linf_zeta: np.ndarray
    hamiltonian: np.ndarray
    mass_zeta: np.ndarray
    mass_v: np.ndarray
    exit_status: ExitStatus
    states: list | None = None
    dt: float = 0.0


def _signed_dispersion(kind: SystemKind, xi: np.ndarray) -> np.ndarray:
    return xi * (1.0 - kind.dispersion_eps * xi**2)


def linear_propagator(kind: SystemKind, grid: Grid1D, dt: float) -> np.ndarray:
    """Exact per-mode propagator matrices, shape (n, 2, 2)."""
    lam = _signed_dispersion(kind, grid.xi)
    out = np.zeros((grid.n, 2, 2), dtype=complex)
    if kind.tag == "kdv_diag":
        out[:, 0, 0] = np.exp(-1j * lam * dt)
        out[:, 1, 1] = np.exp(1j * lam * dt)
    else:
        c = np.cos(lam * dt)
        s = np.sin(lam * dt)
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -1j * s
        out[:, 1, 0] = -1j * s
    return out


@lru_cache(maxsize=32)
def _half_full_propagators(kind: SystemKind, grid: Grid1D, dt: float):
    half = linear_propagator(kind, grid, dt / 2.0)
    full = linear_propagator(kind, grid, dt)
    # (n,2,2) applied to rows of a (2,n) state
    return half.transpose(1, 2, 0), full.transpose(1, 2, 0)


def _apply_propagator(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("ijn,jn->in", P, Y)


def nonlinear_rhs(kind: SystemKind, grid: Grid1D, Y: np.ndarray, dealias: bool = True) -> np.ndarray:
    """Spectra of the quadratic terms only (linear part excluded)."""

    def dprod(ac, bc):
        prod = grid.forward(grid.inverse(ac).real * grid.inverse(bc).real)
        return dealias_spectrum(grid, prod) if dealias else prod

    dx = 1j * grid.xi
    out = np.zeros_like(Y)
    if kind.tag in ("bsq_unit", "bsq_eps"):
        w = 1.0 if kind.tag == "bsq_unit" else kind.eps
        zc, vc = Y
        out[0] = -w * dx * dprod(zc, vc)
        out[1] = -0.5 * w * dx * dprod(vc, vc)
        return out
    uc, wc = Y
    e = kind.eps
    puu = dprod(uc, uc)
    pww = dprod(wc, wc)
    puw = dprod(uc, wc)
    out[0] = -0.5 * e * dx * (1.5 * puu - 0.5 * pww - puw)
    out[1] = -0.5 * e * dx * (0.5 * puu - 1.5 * pww + puw)
    return out


def step(Y: np.ndarray, kind: SystemKind, grid: Grid1D, spec: IntegratorSpec) -> np.ndarray:
    """One Lawson-RK4 step for the (2, n) spectral state."""
    half, full = _half_full_propagators(kind, grid, spec.dt)
    if not spec.include_nonlinear:
        return _apply_propagator(full, Y)
    h = spec.dt
    nl = lambda Z: nonlinear_rhs(kind, grid, Z, spec.dealias)
    k1 = nl(Y)
    k2 = nl(_apply_propagator(half, Y + 0.5 * h * k1))
    ey = _apply_propagator(half, Y)
    k3 = nl(ey + 0.5 * h * k2)
    k4 = nl(_apply_propagator(half, ey + h * k3))
    return _apply_propagator(half, ey + (h / 6.0) * (_apply_propagator(half, k1) + 2.0 * (k2 + k3))) + (
        h / 6.0
    ) * k4


def default_dt(kind: SystemKind, grid: Grid1D, safety: float = 0.5) -> float:
    """dt with max |lam_s(xi)|*dt <= safety over the retained band."""
    lam = np.abs(_signed_dispersion(kind, grid.xi))
    peak = float(np.max(lam[grid.dealias_keep]))
    return safety / peak if peak > 0 else safety


# ---------------------------------------------------------------------------
# state packing and diagnostics


def _pack(kind: SystemKind, initial) -> tuple[Grid1D, np.ndarray]:
    if kind.tag == "kdv_diag":
        u, w = initial
        if u.grid != w.grid:
            raise ConfigurationError("diagonal pair lives on mismatched grids")
        return u.grid, np.stack([u.spectrum, w.spectrum])
    if not isinstance(initial, StateZV):
        raise ConfigurationError("bsq systems take a StateZV initial condition")
    return initial.grid, np.stack([initial.zeta.spectrum, initial.v.spectrum])


def _zeta_v_spectra(kind: SystemKind, Y: np.ndarray):
    if kind.tag == "kdv_diag":
        return Y[0] + Y[1], Y[0] - Y[1]
    return Y[0], Y[1]


def _check_zero_mode(grid: Grid1D, Y: np.ndarray) -> None:
    i0 = grid.index_of_mode_zero()
    if max(abs(Y[0][i0]), abs(Y[1][i0])) > 1e-12:
        raise ConfigurationError("initial data must have zero mean")


def _sobolev_sq(grid: Grid1D, coeffs: np.ndarray, n0: int) -> float:
    weights = (1.0 + grid.xi**2) ** n0
    return float(grid.l2_weight * np.sum(weights * np.abs(coeffs) ** 2))


def _hamiltonian(grid: Grid1D, zc: np.ndarray, vc: np.ndarray, eps: float) -> float:
    xi2 = grid.xi**2
    quad = 0.5 * grid.l2_weight * float(
        np.sum((eps * xi2 - 1.0) * (np.abs(zc) ** 2 + np.abs(vc) ** 2))
    )
    z = grid.inverse(zc).real
    v = grid.inverse(vc).real
    cubic = -0.5 * eps * grid.dx * float(np.sum(v * v * z))
    return quad + cubic


def conserved_quantities(kind: SystemKind, grid: Grid1D, Y: np.ndarray):
    """(H, mass_zeta, mass_v) in the (zeta, v) frame."""
    zc, vc = _zeta_v_spectra(kind, Y)
    i0 = grid.index_of_mode_zero()
    return (
        _hamiltonian(grid, zc, vc, kind.dispersion_eps),
        float(zc[i0].real),
        float(vc[i0].real),
    )


def simulate(
    initial,
    kind: SystemKind,
    spec: IntegratorSpec,
    horizon: float,
    sample_every: int = 10,
    collect_states: bool = False,
) -> Trajectory:
    """Integrate to the horizon or until the energy exit condition fires.

    The step is adjusted downward so the horizon is an integer number of
    steps.  Diagnostics are recorded every sample_every steps (plus the
    initial and final instants); the exit condition E(t) >
    exit_norm_factor^2 * E(0) is checked every step.
    """
    if spec.dt <= 0:
        raise ConfigurationError("simulate requires dt > 0")
    grid, Y = _pack(kind, initial)
    _check_zero_mode(grid, Y)
    n_steps = max(1, int(np.ceil(horizon / spec.dt - 1e-12)))
    dt = horizon / n_steps
    run_spec = dataclasses.replace(spec, dt=dt)
    n0 = spec.exit_sobolev_index

    times, e_n0, linf_z, ham, m_z, m_v = [], [], [], [], [], []
    states: list | None = [] if collect_states else None

    def record(t, Ynow):
        zc, vc = _zeta_v_spectra(kind, Ynow)
        times.append(t)
        e_n0.append(_sobolev_sq(grid, zc, n0) + _sobolev_sq(grid, vc, n0))
        linf_z.append(float(np.max(np.abs(grid.inverse(zc).real))))
        h, mz, mv = conserved_quantities(kind, grid, Ynow)
        ham.append(h)
        m_z.append(mz)
        m_v.append(mv)
        if states is not None:
            states.append(_unpack_state(kind, grid, Ynow))

    record(0.0, Y)
    e_limit = spec.exit_norm_factor**2 * e_n0[0]
    exit_status = ExitStatus("completed", horizon)
    for k in range(1, n_steps + 1):
        Y = step(Y, kind, grid, run_spec)
        t = k * dt
        if not np.all(np.isfinite(Y)):
            exit_status = ExitStatus("nonfinite", t)
            break
        zc, vc = _zeta_v_spectra(kind, Y)
        energy = _sobolev_sq(grid, zc, n0) + _sobolev_sq(grid, vc, n0)
        if e_n0[0] > 0 and energy > e_limit:
            record(t, Y)
            exit_status = ExitStatus("norm_doubled", t)
            break
        if k % sample_every == 0 or k == n_steps:
            record(t, Y)

    return Trajectory(
        system=kind,
        grid=grid,
        n0=n0,
        times=np.asarray(times),
        e_n0=np.asarray(e_n0),
        linf_zeta=np.asarray(linf_z),
        hamiltonian=np.asarray(ham),
        mass_zeta=np.asarray(m_z),
        mass_v=np.asarray(m_v),
        exit_status=exit_status,
        states=states,
        dt=dt,
    )


def _unpack_state(kind: SystemKind, grid: Grid1D, Y: np.ndarray):
    a = RealField(grid, grid.inverse(Y[0]).real, zero_mean=True)
    b = RealField(grid, grid.inverse(Y[1]).real, zero_mean=True)
    if kind.tag == "kdv_diag":
        return (a, b)
    return StateZV(a, b, kind.model)


def diag_change_of_variables(state: StateZV) -> tuple[RealField, RealField]:
    """zeta = u + w, v = u - w: returns (u, w)."""
    grid = state.grid
    u = RealField(grid, 0.5 * (state.zeta.samples + state.v.samples), zero_mean=True)
    w = RealField(grid, 0.5 * (state.zeta.samples - state.v.samples), zero_mean=True)
    return u, w


def diag_to_state(u: RealField, w: RealField, eps: float) -> StateZV:
    grid = u.grid
    zeta = RealField(grid, u.samples + w.samples, zero_mean=True)
    v = RealField(grid, u.samples - w.samples, zero_mean=True)
    return StateZV(zeta, v, eps_model(eps))


# ---------------------------------------------------------------------------
# initial-data families


def _gaussian_derivative(grid: Grid1D, amplitude: float, sigma: float, x0: float) -> np.ndarray:
    y = grid.x - x0
    return amplitude * (-2.0 * y / sigma**2) * np.exp(-((y / sigma) ** 2))


def _project(grid: Grid1D, samples: np.ndarray) -> RealField:
    coeffs = dealias_spectrum(grid, grid.forward(samples))
    coeffs[grid.index_of_mode_zero()] = 0.0
    return RealField(grid, grid.inverse(coeffs).real, zero_mean=True)


def gaussian_pair(
    grid: Grid1D,
    alpha: float = 1.0,
    beta: float = 1.0,
    sigma: float = 4.0,
    x0_zeta: float = 0.0,
    x0_v: float = 0.0,
    model: Model = UNIT,
) -> StateZV:
    """Derivative-of-Gaussian bumps (analytically zero-mean), projected."""
    zeta = _project(grid, _gaussian_derivative(grid, alpha, sigma, x0_zeta))
    v = _project(grid, _gaussian_derivative(grid, beta, sigma, x0_v))
    return StateZV(zeta, v, model)


def random_multibump_pair(
    grid: Grid1D,
    rng: np.random.Generator,
    n_bumps: int = 3,
    sigma_range: tuple[float, float] = (3.0, 6.0),
    spread: float = 0.5,
    model: Model = UNIT,
) -> StateZV:
    """Seeded multi-bump variant of the Gaussian-derivative family."""
    L = grid.half_length

    def make_one():
        total = np.zeros(grid.n)
        for _ in range(n_bumps):
            total += _gaussian_derivative(
                grid,
                rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0]),
                rng.uniform(*sigma_range),
                rng.uniform(-spread * L, spread * L),
            )
        return _project(grid, total)

    return StateZV(make_one(), make_one(), model)


def scale_to_energy(state: StateZV, target: float, n0: int = 4) -> StateZV:
    """Rescale so that ||zeta||_{H^n0}^2 + ||v||_{H^n0}^2 = target^2."""
    energy = sobolev_norm(state.zeta, n0) ** 2 + sobolev_norm(state.v, n0) ** 2
    if energy == 0.0:
        raise ConfigurationError("cannot normalize the zero state")
    factor = target / np.sqrt(energy)
    grid = state.grid
    return StateZV(
        RealField(grid, factor * state.zeta.samples, True),
        RealField(grid, factor * state.v.samples, True),
        state.model,
    )


# ---------------------------------------------------------------------------
# serialization

_DUMP_MAGIC = b"BSQDUMP1"
_TAG_CODES = {"bsq_unit": 0, "bsq_eps": 1, "kdv_diag": 2}
_TAG_NAMES = {v: k for k, v in _TAG_CODES.items()}


def trajectory_to_csv(trajectory: Trajectory, path) -> None:
    """Diagnostics table: t, E_N0, linf_zeta, H, mass_zeta, mass_v."""
    rows = np.column_stack(
        [
            trajectory.times,
            trajectory.e_n0,
            trajectory.linf_zeta,
            trajectory.hamiltonian,
            trajectory.mass_zeta,
            trajectory.mass_v,
        ]
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("t,E_N0,linf_zeta,H,mass_zeta,mass_v\n")
        for row in rows:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def save_state_dump(trajectory: Trajectory, path) -> None:
    """Binary state dump.

    Header: magic "BSQDUMP1", then little-endian u32 version=1, u8 system
    tag (0 unit, 1 eps, 2 kdv), u32 n, f64 L, f64 eps, u32 N0, u32 count;
    per sample: f64 t then two n-vectors of f64 samples.
    """
    if trajectory.states is None:
        raise UnusableInputError("trajectory has no state dumps")
    grid = trajectory.grid
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(
            struct.pack(
                "<IBIddII",
                1,
                _TAG_CODES[trajectory.system.tag],
                grid.n,
                grid.half_length,
                trajectory.system.eps,
                trajectory.n0,
                len(trajectory.states),
            )
        )
        for t, state in zip(trajectory.times, trajectory.states):
            fh.write(struct.pack("<d", float(t)))
            pair = state if isinstance(state, tuple) else (state.zeta, state.v)
            for f in pair:
                fh.write(np.asarray(f.samples, dtype="<f8").tobytes())


def load_state_dump(path) -> tuple[SystemKind, int, list[float], list]:
    """Read a dump back: (system, N0, times, states)."""
    data = Path(path).read_bytes()
    if data[:8] != _DUMP_MAGIC:
        raise UnusableInputError("not a state dump file")
    offset = 8
    version, tag, n, L, eps, n0, count = struct.unpack_from("<IBIddII", data, offset)
    offset += struct.calcsize("<IBIddII")
    if version != 1:
        raise UnusableInputError(f"unsupported dump version {version}")
    kind = SystemKind(_TAG_NAMES[tag], eps)
    grid = Grid1D(int(n), float(L))
    times, states = [], []
    for _ in range(count):
        (t,) = struct.unpack_from("<d", data, offset)
        offset += 8
        a = np.frombuffer(data, dtype="<f8", count=n, offset=offset).copy()
        offset += 8 * n
        b = np.frombuffer(data, dtype="<f8", count=n, offset=offset).copy()
        offset += 8 * n
        fa = RealField(grid, a, zero_mean=True)
        fb = RealField(grid, b, zero_mean=True)
        times.append(t)
        states.append((fa, fb) if kind.tag == "kdv_diag" else StateZV(fa, fb, kind.model))
    return kind, int(n0), times, states
