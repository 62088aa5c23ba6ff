"""Chambolle-Pock primal-dual iteration."""

import math

import numpy as np

from ..diffops import div_h, grad_h
from ..prox import apply_data_resolvent, project_linf_ball
from ._common import Monitor, initial_image
from .problem import ProblemSpec, SolverParams, radon_norm_sq

__all__ = ["chambolle_pock", "StepSizeError", "cp_step_bound", "cp_steps"]


class StepSizeError(ValueError):
    """The primal and dual step sizes violate the convergence condition."""


def cp_step_bound(prob: ProblemSpec):
    """``L = |R|^2 + 8 tau_grad^2 / h^2``; steps must satisfy ``sigma tau L < 1``."""
    h = prob.op.image_geom.h
    return radon_norm_sq(prob.op) + 8.0 * prob.tau_grad**2 / h**2


def cp_steps(prob: ProblemSpec, ratio=1.0, safety=0.99):
    """Primal/dual steps with ``sigma / tau = ratio`` and ``sigma tau L = safety**2``.

    Ratios well above one (e.g. 30 to 100 on rescaled problems) usually
    converge much faster than the symmetric default.
    """
    if not ratio > 0:
        raise ValueError("step ratio must be positive")
    L = cp_step_bound(prob)
    return safety * math.sqrt(ratio / L), safety / math.sqrt(ratio * L)


def chambolle_pock(prob: ProblemSpec, params: SolverParams | None = None, init=None, trace=None):
    """Minimise the TV problem with the Chambolle-Pock algorithm.

    The dual variable is ``(w, v)`` for ``K = (tau_grad grad, R)``. One
    iteration performs

    * ``w = P(w + tau tau_g grad ubar)``, with P the projection onto the
      ball of radius ``lam / tau_g``;
    * ``v = resolvent(v + tau R ubar)`` (data fidelity, step ``tau``);
    * ``u_new = u + sigma tau_g div w - sigma R^* v``, clipped at 0 if
      ``prob.nonneg``;
    * ``ubar = 2 u_new - u``.

    Parameters
    ----------
    prob : ProblemSpec
    params : SolverParams, optional
        ``sigma`` and ``tau_step`` default to ``0.99 / sqrt(L)``.
    init : ndarray or Image, optional
        Starting image (zero by default).
    trace : ConvergenceTrace, optional
        Appended to in place when given.

    Returns
    -------
    u : ndarray
    trace : ConvergenceTrace

    Raises
    ------
    StepSizeError
        If ``sigma * tau * L >= 1``.
    """
    params = params or SolverParams()
    L = cp_step_bound(prob)
    sigma = params.sigma if params.sigma is not None else 0.99 / math.sqrt(L)
    tau = params.tau_step if params.tau_step is not None else 0.99 / math.sqrt(L)
    if not sigma * tau * L < 1.0:
        raise StepSizeError(
            f"step sizes violate sigma*tau*L < 1 (sigma={sigma}, tau={tau}, L={L})"
        )
    op, h, tg = prob.op, prob.op.image_geom.h, prob.tau_grad
    radius = prob.lam / tg

    u = initial_image(prob, init)
    ubar = u.copy()
    w = np.zeros(u.shape + (2,))
    v = np.zeros(op.range_shape)
    mon = Monitor(prob, params, trace)
    it = 0
    u_old = u
    for it in range(1, int(params.max_iter) + 1):
        w = project_linf_ball(w + tau * tg * grad_h(ubar, h), radius)
        v = apply_data_resolvent(v + tau * op.forward(ubar), prob.u0, prob.mask, prob.variant, tau)
        u_new = u + sigma * tg * div_h(w, h) - sigma * op.adjoint(v)
        if prob.nonneg:
            np.maximum(u_new, 0.0, out=u_new)
        ubar = 2.0 * u_new - u
        u_old, u = u, u_new
        if mon(it, u, u_old):
            break
    return u, mon.finish(it, u, u_old)
