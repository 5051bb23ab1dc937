"""Exact finite-dimensional Koopman embeddings of lower-triangular polynomial systems."""

from .lifting import (
    LiftingSet,
    SystemSpec,
    compute_lifting,
    decompose_per_state,
    lie_derivative,
    validate_structure,
)
from .model import KoopmanModel, build_A, build_B, build_jacobian, build_model, eval_numeric, reorder, residual
from .poly_core import Monomial, ParamId, ParamLinForm, ParamPolynomial
from .simulator import (
    Trajectory,
    compare,
    expm_propagate,
    integrate_lifted,
    integrate_nonlinear,
    lift_state,
    project,
)
from .spec_io import parse_spec, render_document
from .systems import fourth_order_example, make_system, random_triangular_system

__version__ = "0.1.0"
