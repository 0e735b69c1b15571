"""Constrained minimization and bubble decomposition on truncated lattice graphs."""

__version__ = "0.1.0"

from .coefficients import CoefficientField, field_from_spec
from .functionals import (
    ProblemParams,
    gateaux_gradient,
    j1,
    j2,
    phi,
    phi_bar,
    residual_norm,
)
from .lattice import (
    LatticeBox,
    LatticeFunction,
    delta,
    embed,
    epq_norm,
    gradient_form,
    gradient_norm_sq,
    graph_distance,
    laplacian,
    lp_norm,
    neighbors,
    place,
    read_function_csv,
    translate,
    write_function_csv,
)
from .minimize import (
    MinimizeResult,
    beta_sweep,
    default_init,
    lagrange_multiplier,
    lambda_bounds,
    minimize_constrained,
    normalize_to_constraint,
    positivity_check,
    radius_study,
    recenter,
)
from .decompose import (
    BubbleBudgetError,
    Decomposition,
    FunctionSequence,
    energy_identity_check,
    extract_bubbles,
    load_sequence,
    pointwise_limit,
    save_sequence,
    separation_check,
    synthesize_sequence,
)
from .checks import (
    CheckReport,
    brezis_lieb_defect,
    fd_gradient_check,
    lions_decay_check,
    norm_equivalence_ratio,
    phi_phibar_gap,
    run_verification_suite,
)
