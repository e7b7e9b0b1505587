"""bsqlab: a numerical laboratory for strongly dispersive 1D Boussinesq
systems on periodic grids.

Subpackages:

* spectral   -- grids, fields, transforms, multipliers, norms
* cutoffs    -- dyadic cutoffs, Littlewood-Paley projections, para-products
* phases     -- dispersion relations, interaction phases, resonance geometry
* goodvars   -- good unknowns, quadratic symbols, symmetrized decompositions
* evolution  -- exact-propagator Lawson-RK4 integration and diagnostics
* experiments -- scaling / convergence / atlas / energy-budget studies
* verify     -- the invariant check suite behind the `verify` CLI command
"""

__version__ = "0.1.0"

from .errors import (
    BsqlabError,
    CheckFailure,
    ConfigurationError,
    ContractionError,
    DomainError,
    GridMismatchError,
    NumericalError,
    UnusableInputError,
)
from .spectral import (
    ComplexField,
    FourierMultiplier,
    Grid1D,
    RealField,
    apply_multiplier,
    dealias_and_mean,
    l2_norm,
    linf_norm,
    make_grid,
    norm,
    random_real_field,
    sobolev_norm,
    transform,
    wkinf_norm,
)
from .cutoffs import (
    CutoffFamily,
    lp_project,
    paraproduct,
    phi_base,
    remainder,
    shell_weight,
)
from .phases import (
    Model,
    PhaseSpec,
    UNIT,
    abcd_eigenvalues,
    cutoff_D,
    eps_model,
    jacobian_psi,
    lambda_dispersion,
    modulation_value,
    phase_closed,
    phase_direct,
    small_modulation_measure,
    wellposed_predicate,
)
from .goodvars import (
    GoodState,
    ProfilePair,
    StateZV,
    SymbolKernel,
    assemble_symmetrized_rhs,
    b_bilinear,
    bilinear_apply,
    decomposition_residual,
    energy_functional,
    good_forward,
    good_inverse,
    make_state,
    profile_shift,
    profile_time_derivative_bound,
    symbol_eval,
    symbol_kernel,
)
from .evolution import (
    IntegratorSpec,
    SystemKind,
    Trajectory,
    bsq_eps,
    bsq_unit,
    conserved_quantities,
    default_dt,
    diag_change_of_variables,
    diag_to_state,
    gaussian_pair,
    kdv_diag,
    linear_propagator,
    nonlinear_rhs,
    simulate,
    step,
)
from .experiments import (
    StudySpec,
    budget_study,
    convergence_study,
    energy_budget,
    fit_doubling_exponent,
    resonance_atlas,
    scaling_study,
)
