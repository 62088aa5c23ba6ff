"""ADMM for the unconstrained TV problem, with a few PCG steps per iteration."""

from typing import NamedTuple

import numpy as np

from ..diffops import div_h, grad_h, laplacian_h
from ..grid import Image
from ..prox import FidelityKind, soft_threshold_2d
from ._common import Monitor, initial_image
from .problem import ProblemSpec, SolverParams

__all__ = ["admm", "pcg", "PCGResult"]


class PCGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    rel_residual: float
    breakdown: bool


def pcg(apply_A, b, precond_inv=None, iters=50, tol=1e-10, x0=None):
    """Preconditioned conjugate gradients for ``A x = b``.

    Parameters
    ----------
    apply_A : callable
        Symmetric positive (semi-)definite operator.
    b : ndarray or Image
    precond_inv : callable, optional
        Applies ``M^{-1}``; identity when omitted.
    iters : int
        Maximum number of iterations.
    tol : float
        Stop once ``|r| <= tol |b|``.
    x0 : ndarray, optional
        Warm start.

    Returns
    -------
    PCGResult
        ``breakdown`` is set when a direction of zero curvature is met; the
        iterate reached so far is returned.
    """
    b = b.data if isinstance(b, Image) else np.asarray(b, dtype=np.float64)
    Minv = precond_inv or (lambda r: r)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply_A(x) if x0 is not None else b.copy()
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return PCGResult(np.zeros_like(b), 0, 0.0, False)
    res = np.linalg.norm(r) / nb
    if res <= tol:
        return PCGResult(x, 0, res, False)
    z = Minv(r)
    p = z.copy()
    rz = float(np.vdot(r, z))
    k = 0
    for k in range(1, int(iters) + 1):
        Ap = apply_A(p)
        curv = float(np.vdot(p, Ap))
        if not curv > 0:
            return PCGResult(x, k - 1, res, True)
        step = rz / curv
        x = x + step * p
        r = r - step * Ap
        res = np.linalg.norm(r) / nb
        if res <= tol:
            break
        z = Minv(r)
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return PCGResult(x, k, res, False)


def admm(prob: ProblemSpec, params: SolverParams | None, precond, init=None, trace=None):
    """ADMM on ``z = (w, v) = (R u, grad u)`` with the weighting ``diag(I, tau^2 I)``.

    Scaled multipliers ``eta = (eta_w, eta_v)`` and penalty ``mu``:

    * u: ``params.pcg_iters`` PCG steps on
      ``(R^*R - tau^2 Lap_h) u = R^*(w - eta_w) - tau^2 div(v - eta_v)``,
      warm-started at the previous ``u``;
    * w: ``(u0 + mu (R u + eta_w)) / (1 + mu)``;
    * v: soft threshold of ``grad u + eta_v`` at ``lam / (mu tau^2)``;
    * eta: ``eta - (z - K u)``.

    ``precond`` should be calibrated for ``alpha = 1, beta = tau^2``.

    Raises
    ------
    NotImplementedError
        For constrained problems or non-default data-fidelity variants.
    """
    params = params or SolverParams()
    if prob.constrained or prob.nonneg or prob.variant.kind is not FidelityKind.SOFT:
        raise NotImplementedError("ADMM variant implemented for (P_h) only")
    op, h = prob.op, prob.op.image_geom.h
    t2 = prob.tau_grad**2
    mu = float(params.admm_mu)
    thr = prob.lam / (mu * t2)

    def A(x):
        return op.normal(x) - t2 * laplacian_h(x, h)

    u = initial_image(prob, init)
    w = op.forward(u)
    v = grad_h(u, h)
    eta_w = np.zeros_like(w)
    eta_v = np.zeros_like(v)

    mon = Monitor(prob, params, trace)
    it = 0
    u_old = u
    for it in range(1, int(params.max_iter) + 1):
        rhs = op.adjoint(w - eta_w) - t2 * div_h(v - eta_v, h)
        u_new = pcg(A, rhs, precond.apply_inverse, params.pcg_iters, tol=0.0, x0=u).x
        ru = op.forward(u_new)
        gu = grad_h(u_new, h)
        w = (prob.u0 + mu * (ru + eta_w)) / (1.0 + mu)
        v = soft_threshold_2d(gu + eta_v, thr)
        eta_w = eta_w - (w - ru)
        eta_v = eta_v - (v - gu)
        u_old, u = u, u_new
        if mon(it, u, u_old):
            break
    return u, mon.finish(it, u, u_old)
