"""One-call driver that builds a matching preconditioner and runs a solver."""

from dataclasses import replace

from ..precond import make_preconditioner
from .admm import admm
from .cp import chambolle_pock
from .pdrq import Splitting, pdrq, pdrq_nonneg, precond_weights
from .problem import ProblemSpec, SolverParams, default_pdrq_sigma, default_tau_grad

__all__ = ["SOLVERS", "run_solver", "build_preconditioner"]

SOLVERS = ("cp", "pdrq1", "pdrq2", "pdrq3", "pdrq-nonneg", "admm")


def build_preconditioner(prob: ProblemSpec, solver, kind, params: SolverParams, eps=1.0, iters=200, seed=0):
    """Preconditioner calibrated for the operator ``T`` of ``solver``."""
    if solver == "admm":
        alpha, beta, shift = 1.0, prob.tau_grad**2, 0.0
    else:
        split = "pdrq1" if solver == "pdrq-nonneg" else solver
        alpha, beta, shift = precond_weights(
            split, params.sigma, prob.tau_grad, params.mu, nonneg=solver == "pdrq-nonneg"
        )
    return make_preconditioner(kind, prob.op, alpha, beta, eps=eps, shift=shift, iters=iters, seed=seed)


def run_solver(prob: ProblemSpec, solver="pdrq1", precond="inverse-norm", params=None, init=None,
               trace=None, eps=1.0, calib_iters=200, seed=0, tau_grad="auto"):
    """Solve ``prob`` with the named solver.

    Parameters
    ----------
    prob : ProblemSpec
    solver : {'cp', 'pdrq1', 'pdrq2', 'pdrq3', 'pdrq-nonneg', 'admm'}
    precond : str
        Preconditioner kind (ignored by ``cp``).
    params : SolverParams, optional
    init : ndarray, optional
    trace : ConvergenceTrace, optional
    eps, calib_iters, seed
        Preconditioner smoothing, calibration iterations and seed.
    tau_grad : 'auto', float or None
        Gradient scaling. ``'auto'`` applies :func:`default_tau_grad` to the
        solvers whose dual carries the data term (PDRQ1, PDRQ3, the
        non-negative variant and ADMM) and keeps ``prob.tau_grad`` for CP
        and PDRQ2; ``None`` always keeps it.

    Returns
    -------
    u : ndarray
    trace : ConvergenceTrace
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    params = params or SolverParams()
    if solver == "pdrq-nonneg" and not prob.nonneg:
        prob = replace(prob, nonneg=True)
    if tau_grad == "auto":
        if solver not in ("cp", "pdrq2"):
            prob = prob.with_tau_grad(default_tau_grad(prob))
    elif tau_grad is not None:
        prob = prob.with_tau_grad(tau_grad)
    if solver == "cp":
        return chambolle_pock(prob, params, init=init, trace=trace)
    if solver != "admm" and params.sigma is None:
        split = "pdrq1" if solver == "pdrq-nonneg" else solver
        params = replace(params, sigma=default_pdrq_sigma(prob, split, nonneg=prob.nonneg))
    P = build_preconditioner(prob, solver, precond, params, eps=eps, iters=calib_iters, seed=seed)
    if solver == "admm":
        return admm(prob, params, P, init=init, trace=trace)
    if solver == "pdrq-nonneg":
        return pdrq_nonneg(prob, params, P, init=init, trace=trace)
    return pdrq(prob, params, P, Splitting(solver), init=init, trace=trace)
