"""Preconditioned Douglas-Rachford iteration for linear-quadratic saddle points.

The saddle-point problem is

    min_u max_y  1/2 <Q u, u> + <f, u> + <K u, y> - 1/2 <S y, y> - <g, y> - F(y)

and one step of the iteration (step ``sigma``, dual weight ``mu >= 1``)
reads, with ``A = (mu + sigma S)^{-1}``,

    b    = -sigma K^* A((mu - 1) y + ybar - sigma g) - sigma f
    u    = u + M^{-1} (b - T u),         T = sigma Q + sigma^2 K^* A K
    y    = A((mu - 1) y + ybar + sigma (K u - g))
    ybar = ybar + (I + sigma dF)^{-1}(2 y - ybar) - y

Because the primal part is purely linear-quadratic, convergence only needs
``M >= T`` and ``M > 0``. Three splittings are provided:

========  ================  ==================  =========================
name      K                 Q, f                S, g
========  ================  ==================  =========================
PDRQ1     (R, tau grad)     0, 0                0, 0
PDRQ2     tau grad          R^*R, -R^* u0       0, 0
PDRQ3     (R, tau grad)     0, 0                chi off the mask, u0 chi
========  ================  ==================  =========================

With the constraint ``u >= 0`` the primal part is no longer linear-quadratic
and the identity enters ``T`` (see :func:`pdrq_nonneg`).
"""

import enum

import numpy as np

from ..diffops import div_h, grad_h
from ..prox import FidelityKind, apply_data_resolvent, project_linf_ball, resolvent_ineq_dual
from ._common import Monitor, initial_image
from .problem import ProblemSpec, SolverParams, default_pdrq_sigma

__all__ = ["Splitting", "pdrq", "pdrq_nonneg", "precond_weights", "SplittingError"]


class SplittingError(ValueError):
    """The splitting cannot represent the requested problem."""


class Splitting(str, enum.Enum):
    PDRQ1 = "pdrq1"
    PDRQ2 = "pdrq2"
    PDRQ3 = "pdrq3"


def precond_weights(splitting, sigma, tau_grad, mu=1.0, nonneg=False):
    """``(alpha, beta, shift)`` of the operator ``T`` a preconditioner must dominate.

    PDRQ3 shares the weights of PDRQ1 since its ``T`` is smaller.
    """
    splitting = Splitting(splitting)
    beta = sigma**2 * tau_grad**2 / mu
    alpha = sigma if splitting is Splitting.PDRQ2 else sigma**2 / mu
    return alpha, beta, (1.0 if nonneg else 0.0)


def _check(prob, params):
    if params.nu != 0:
        raise NotImplementedError("only nu = 0 is supported")


class _Ops:
    """``K``, ``K^*`` on the product space ``(data, gradient)``."""

    def __init__(self, prob, with_data):
        self.op = prob.op
        self.h = prob.op.image_geom.h
        self.tg = prob.tau_grad
        self.with_data = with_data

    def K(self, u):
        g = self.tg * grad_h(u, self.h)
        return (self.op.forward(u), g) if self.with_data else (None, g)

    def Kadj(self, y):
        yd, yg = y
        out = -self.tg * div_h(yg, self.h)
        if self.with_data:
            out = out + self.op.adjoint(yd)
        return out


def pdrq(prob: ProblemSpec, params: SolverParams | None, precond, splitting="pdrq1", init=None, trace=None):
    """Solve the TV problem with preconditioned Douglas-Rachford.

    Parameters
    ----------
    prob : ProblemSpec
        Must have ``nonneg=False`` (use :func:`pdrq_nonneg`).
    params : SolverParams
        ``sigma`` (default :func:`default_pdrq_sigma`) and ``mu`` (default
        1); ``nu`` must be 0. The preconditioner must be built for the same
        ``sigma``.
    precond : Preconditioner
        Calibrated for the weights returned by :func:`precond_weights`.
    splitting : {'pdrq1', 'pdrq2', 'pdrq3'}
    init : ndarray or Image, optional
    trace : ConvergenceTrace, optional

    Returns
    -------
    u : ndarray
    trace : ConvergenceTrace

    Raises
    ------
    SplittingError
        PDRQ2 with a constraint mask, or PDRQ2/PDRQ3 with a data-fidelity
        variant other than the plain quadratic / soft constraint.
    """
    params = params or SolverParams()
    _check(prob, params)
    splitting = Splitting(splitting)
    if prob.nonneg:
        raise SplittingError("use pdrq_nonneg for the non-negativity constrained problem")
    kind = prob.variant.kind
    if splitting is Splitting.PDRQ2 and (prob.mask or kind is not FidelityKind.SOFT):
        raise SplittingError("PDRQ2 handles only the unconstrained problem (empty mask)")
    if splitting is Splitting.PDRQ3 and kind is not FidelityKind.SOFT:
        raise SplittingError("PDRQ3 is implemented for the soft-constraint variant only")

    sigma = params.sigma if params.sigma is not None else default_pdrq_sigma(prob, splitting)
    mu = float(params.mu)
    radius = prob.lam / prob.tau_grad
    op = prob.op
    ops = _Ops(prob, with_data=splitting is not Splitting.PDRQ2)
    Minv = precond.apply_inverse

    # A = (mu + sigma S)^{-1} on the data block and g
    if splitting is Splitting.PDRQ3:
        off = ~prob.mask.mask
        a_data = np.where(off, 1.0 / (mu + sigma), 1.0 / mu)
        g_data = np.where(off, prob.u0, 0.0)
        C = prob.mask.thresholds
    else:
        a_data, g_data = 1.0 / mu, 0.0
    a_grad = 1.0 / mu

    if splitting is Splitting.PDRQ2:
        f = -op.adjoint(prob.u0)

        def T(u):
            return sigma * op.normal(u) + sigma**2 * ops.Kadj((None, a_grad * ops.K(u)[1]))

    else:
        f = None

        def T(u):
            yd, yg = ops.K(u)
            return sigma**2 * ops.Kadj((a_data * yd, a_grad * yg))

    def resolvent_F(z):
        zd, zg = z
        zg = project_linf_ball(zg, radius)
        if splitting is Splitting.PDRQ1:
            zd = apply_data_resolvent(zd, prob.u0, prob.mask, prob.variant, sigma)
        elif splitting is Splitting.PDRQ3 and prob.mask:
            zd = np.where(prob.mask.mask, resolvent_ineq_dual(zd, C, sigma), zd)
        return zd, zg

    u = initial_image(prob, init)
    yd = np.zeros(op.range_shape) if ops.with_data else None
    yg = np.zeros(u.shape + (2,))
    ybd = None if yd is None else yd.copy()
    ybg = yg.copy()

    mon = Monitor(prob, params, trace)
    it = 0
    u_old = u
    for it in range(1, int(params.max_iter) + 1):
        # b from the previous dual state
        cg = a_grad * ((mu - 1.0) * yg + ybg)
        cd = None if yd is None else a_data * ((mu - 1.0) * yd + ybd - sigma * g_data)
        b = -sigma * ops.Kadj((cd, cg))
        if f is not None:
            b = b - sigma * f
        u_new = u + Minv(b - T(u))

        kd, kg = ops.K(u_new)
        yg = a_grad * ((mu - 1.0) * yg + ybg + sigma * kg)
        if yd is not None:
            yd = a_data * ((mu - 1.0) * yd + ybd + sigma * (kd - g_data))
        rd, rg = resolvent_F((None if yd is None else 2.0 * yd - ybd, 2.0 * yg - ybg))
        ybg = ybg + rg - yg
        if yd is not None:
            ybd = ybd + rd - yd

        u_old, u = u, u_new
        if mon(it, u, u_old):
            break
    return u, mon.finish(it, u, u_old)


def pdrq_nonneg(prob: ProblemSpec, params: SolverParams | None, precond, init=None, trace=None):
    """PDRQ1 splitting with the additional constraint ``u >= 0``.

    The primal resolvent is the projection ``max(., 0)``, so ``T`` gains an
    identity term: ``T = I + sigma^2/mu (R^*R - tau^2 Lap_h)`` and
    ``precond`` must dominate it (build it with ``shift=1``). The returned
    image is the projected point ``max(2 u - ubar, 0)``, which is
    non-negative by construction and equals ``u`` at convergence.
    """
    params = params or SolverParams()
    _check(prob, params)
    sigma = params.sigma if params.sigma is not None else default_pdrq_sigma(prob, "pdrq1", nonneg=True)
    mu = float(params.mu)
    radius = prob.lam / prob.tau_grad
    op = prob.op
    ops = _Ops(prob, with_data=True)
    Minv = precond.apply_inverse
    a = 1.0 / mu

    def T(u):
        yd, yg = ops.K(u)
        return u + sigma**2 * ops.Kadj((a * yd, a * yg))

    u = initial_image(prob, init)
    np.maximum(u, 0.0, out=u)
    ubar = u.copy()
    yd = np.zeros(op.range_shape)
    yg = np.zeros(u.shape + (2,))
    ybd, ybg = yd.copy(), yg.copy()

    mon = Monitor(prob, params, trace)
    it = 0
    z_old = z = u
    for it in range(1, int(params.max_iter) + 1):
        b = ubar - sigma * ops.Kadj((a * ((mu - 1.0) * yd + ybd), a * ((mu - 1.0) * yg + ybg)))
        u = u + Minv(b - T(u))
        kd, kg = ops.K(u)
        yd = a * ((mu - 1.0) * yd + ybd + sigma * kd)
        yg = a * ((mu - 1.0) * yg + ybg + sigma * kg)
        z_old, z = z, np.maximum(2.0 * u - ubar, 0.0)
        ubar = ubar + z - u
        zd = apply_data_resolvent(2.0 * yd - ybd, prob.u0, prob.mask, prob.variant, sigma)
        zg = project_linf_ball(2.0 * yg - ybg, radius)
        ybd = ybd + zd - yd
        ybg = ybg + zg - yg
        if mon(it, z, z_old):
            break
    return z, mon.finish(it, z, z_old)
