"""Locally optimal designs for inverse quadratic regression models."""

from __future__ import annotations

from .chebyshev import (
    ChebyshevSolution,
    chebyshev_points,
    equioscillation_coefficients,
    in_a_star,
    optimal_weights_for_c,
    system_determinant,
)
from .closed_form import (
    IntervalForm,
    ScalingFactor,
    classify_interval,
    geometric_support,
    scaling_factor,
    scaling_factor_d,
    scaling_factor_d1,
    unbounded_design,
)
from .design import (
    Criterion,
    Design,
    DesignSpace,
    apportion,
    criterion_value,
    efficiency,
    estimable,
    generalized_c_form,
    information_matrix,
    load_design,
    save_design,
    uniform_design,
)
from .errors import *  # noqa: F401,F403
from .model import ModelSpec, eta, gamma, gradient, peak_location, peak_value, validate
from .optimize import SolverConfig, grid_oracle, optimal_design
from .simulate import SimConfig, SimReport, fit_mle, run_simulation
from .verify import (
    OptimalityReport,
    check_c_optimality,
    check_d_optimality,
    check_e_optimality,
    check_optimality,
)

__version__ = "0.1.0"
