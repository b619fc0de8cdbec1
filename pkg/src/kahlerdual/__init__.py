"""Dual Kähler potentials, special symplectic duality maps and their numerical checks."""

from .duality import (
    DualityProblem,
    SpecialMap,
    candidate_lambda,
    dual,
    dual_polarized,
    make_problem,
    necsuff_residual,
    residual_radial,
    residual_rotation_invariant,
    special_map_from_potential,
)
from .forms import FormMatrix, dual_form_at, gaussian_curvature_radial, kahler_form_at
from .numkit import DomainError, Jet1, JetN
from .potentials import catalog, strict_psh_at_origin
from .verify import GridSpec, VerificationReport, check_duality, run_suite

__version__ = "0.1.0"
