"""Physical-constraints-preserving schemes for special relativistic MHD.

Admissible-state predicates, primitive recovery, Lax-Friedrichs fluxes, the
positivity limiter, 1D and 2D finite-volume solvers and a property-based
verification harness.
"""

from __future__ import annotations

from .errors import (
    AverageNotAdmissible,
    CflTooLarge,
    ConfigError,
    ConstraintInfeasible,
    IndexOutOfRange,
    InvalidDirection,
    InvalidPrimitive,
    NoConvergence,
    NoExactSolution,
    NonpositiveScale,
    NotAdmissible,
    NotOrthogonal,
    NotUnitNormal,
    OutsideDomain,
    PreconditionViolated,
    RMHDError,
    WeightMismatch,
)
from .flux import lax_friedrichs_flux, physical_flux, rotated_flux
from .limiter import CellNodeData, pcp_limit
from .solver1d import Grid1D, reconstruct_muscl, step_lxf_1d, step_muscl_pcp_1d
from .solver2d import (
    Grid2D,
    discrete_divergence,
    div_in_out_diagnostics,
    divergence_error_sup,
    init_cell_averages_2d,
    step_lxf_2d,
)
from .state import (
    AdmissibilityReport,
    AuxPoly,
    AuxRoots,
    Eos,
    PrimitiveState,
    aux_roots,
    eval_aux_polynomial,
    eval_fU,
    hat_tilde_q,
    is_admissible_eps,
    is_admissible_first_form,
    primitive_to_conserved,
    psi_fn,
    q_fn,
    recover_primitives,
    rotate_state,
    scale_state,
    second_form_margin,
)

__version__ = "0.1.0"
