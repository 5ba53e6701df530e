"""Quadrotor trajectory-tracking bench.

Euler-Lagrange rigid-body model, linear and nonlinear model-predictive
controllers on a shared box-QP kernel, three classical cascade baselines,
and a closed-loop harness with RMSE reporting.
"""

from .base import StepResult
from .baselines import BaselineController, BscGains, PdGains, SmcGains, baseline_step
from .dynamics import (
    QuadParams,
    SingularAttitudeError,
    control_allocation,
    coriolis_matrix,
    dynamics_rhs,
    euler_rate_matrix,
    hover_input,
    inertia_jacobian,
    inverse_control_allocation,
    inverse_euler_rate_matrix,
    rotation_matrix,
)
from .harness import (
    ControllerSpec,
    MetricsReport,
    Scenario,
    SimTrace,
    compute_rmse,
    disturbance_profile,
    run_closed_loop,
)
from .lmpc import CondensedQP, LmpcConfig, LmpcController, condense, hover_model
from .nmpc import NmpcConfig, NmpcController, shoot, step_jacobians, step_map
from .numerics import LinearModel, discretize, linearize, rk4_step
from .qp import BoxQP, QPSolution, solve_box_qp
from .references import RefPoint, helix_reference, make_helix, make_hover, reference_window

__all__ = [
    "BaselineController",
    "BoxQP",
    "BscGains",
    "CondensedQP",
    "ControllerSpec",
    "LinearModel",
    "LmpcConfig",
    "LmpcController",
    "MetricsReport",
    "NmpcConfig",
    "NmpcController",
    "PdGains",
    "QPSolution",
    "QuadParams",
    "RefPoint",
    "Scenario",
    "SimTrace",
    "SingularAttitudeError",
    "SmcGains",
    "StepResult",
    "baseline_step",
    "compute_rmse",
    "condense",
    "control_allocation",
    "coriolis_matrix",
    "discretize",
    "disturbance_profile",
    "dynamics_rhs",
    "euler_rate_matrix",
    "helix_reference",
    "hover_input",
    "hover_model",
    "inertia_jacobian",
    "inverse_control_allocation",
    "inverse_euler_rate_matrix",
    "linearize",
    "make_helix",
    "make_hover",
    "reference_window",
    "rk4_step",
    "rotation_matrix",
    "run_closed_loop",
    "shoot",
    "solve_box_qp",
    "step_jacobians",
    "step_map",
]
