"""Solvers for TV-regularised reconstruction with inequality constraints."""

from .admm import PCGResult, admm, pcg
from .cp import StepSizeError, chambolle_pock, cp_step_bound, cp_steps
from .pdrq import Splitting, SplittingError, pdrq, pdrq_nonneg, precond_weights
from .problem import (
    ConvergenceTrace,
    ProblemSpec,
    SolverParams,
    attenuation_scale,
    default_pdrq_sigma,
    default_tau_grad,
    objective,
    rel_change,
    violation,
)
from .run import SOLVERS, build_preconditioner, run_solver

__all__ = [
    "ProblemSpec",
    "SolverParams",
    "ConvergenceTrace",
    "objective",
    "violation",
    "rel_change",
    "chambolle_pock",
    "cp_step_bound",
    "cp_steps",
    "StepSizeError",
    "pdrq",
    "pdrq_nonneg",
    "precond_weights",
    "Splitting",
    "SplittingError",
    "admm",
    "pcg",
    "PCGResult",
    "attenuation_scale",
    "default_pdrq_sigma",
    "default_tau_grad",
    "SOLVERS",
    "build_preconditioner",
    "run_solver",
]
