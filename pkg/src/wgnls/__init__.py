"""Spectral toolkit for the focusing NLS on waveguide domains R^d x T^m.

Ground states with frequency or mass constraints, their variational
identities (duality of the virial and Nehari routes, the Legendre-Fenchel
relation between the two constrained problems, the y-dependence threshold,
dilation scaling laws), and split-step time evolution with virial blow-up
diagnostics.
"""

__version__ = "0.1.0"

from .params import DomainSpec, ModelParams
from .fields import (
    Field,
    field_from_function,
    load_field,
    random_band_limited,
    save_field,
    zero_field,
)
from .spectral import (
    AliasingWarning,
    boundary_mass_fraction,
    gradient_x,
    gradient_y,
    laplacian,
    quadrature,
    resample,
)
from .functionals import (
    DegenerateFieldError,
    FunctionalReport,
    dilate_v,
    evaluate,
    gn_ratio,
    project_K,
    project_N,
    rho_admissible_min,
    rho_norms_closed_form,
    rho_norms_piecewise,
    rho_profile,
    scale_T,
)
from .descent import SolverOptions
from .reference import ReferenceSoliton, solve_reference
from .frequency import (
    GroundState,
    SweepRecord,
    ThresholdResult,
    find_omega_star,
    reference_action_discrete,
    solve_beta,
    solve_gamma,
    sweep,
)
from .masses import (
    InfeasibleMassError,
    MassCurveRecord,
    feasible_field,
    lf_check,
    mass_curve,
    solve_m_c,
)
from .dynamics import (
    BLOWUP_INDICATED,
    COERCIVE_GLOBAL,
    INCONCLUSIVE,
    EvolutionTrace,
    EvolveOptions,
    classify,
    cutoff_chi,
    evolve,
    mei_value,
    virial_diagnostics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
