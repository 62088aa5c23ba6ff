"""Resolvents (proximal maps) of the functionals used by the solvers.

Every scalar map below is vectorised over numpy arrays and computes
``argmin_x 1/2 (x - v)^2 + tau f(x)`` for the indicated ``f``; the data
fidelity resolvents act on the *dual* (conjugate) functionals.
"""

import enum

import numpy as np

from .grid import ConstraintMask, GeometryError, Sinogram

__all__ = [
    "DataFidelityVariant",
    "FidelityKind",
    "resolvent_quad_data",
    "resolvent_ineq_dual",
    "resolvent_ignore",
    "resolvent_quad_plus_ineq",
    "resolvent_hard_eq",
    "resolvent_weighted_quad",
    "resolvent_nonneg",
    "project_linf_ball",
    "soft_threshold_2d",
    "apply_data_resolvent",
]


def _positive(name, value):
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be positive")


def resolvent_quad_data(v, u0, tau):
    """Dual resolvent of ``1/2 (x - u0)^2``: ``(v - tau u0) / (1 + tau)``."""
    _positive("tau", tau)
    return (v - tau * u0) / (1.0 + tau)


def resolvent_ineq_dual(v, C, tau):
    """Dual resolvent of the indicator of ``[C, inf)``: ``min(v - tau C, 0)``."""
    _positive("tau", tau)
    return np.minimum(v - tau * C, 0.0)


def resolvent_ignore(v):
    """Dual resolvent of the zero functional (data ignored): always 0."""
    return np.zeros_like(np.asarray(v, dtype=np.float64))


def resolvent_quad_plus_ineq(v, a, C, tau):
    """Dual resolvent of ``1/2 (x - a)^2`` restricted to ``x >= C``.

    Quadratic branch ``(v - tau a)/(1 + tau)`` when ``v >= C (1 + tau) - a``,
    otherwise ``v - tau C``. The two branches meet continuously at the seam.
    """
    _positive("tau", tau)
    v = np.asarray(v, dtype=np.float64)
    quad = (v - tau * a) / (1.0 + tau)
    return np.where(v >= C * (1.0 + tau) - a, quad, v - tau * C)


def resolvent_hard_eq(v, u0, sigma):
    """Dual resolvent of the indicator of ``{u0}``: ``v - sigma u0``."""
    _positive("sigma", sigma)
    return v - sigma * u0


def resolvent_weighted_quad(v, u0, tau, omega):
    """Dual resolvent of ``omega/2 (x - u0)^2``."""
    _positive("tau", tau)
    if not np.all(np.asarray(omega) > 0):
        raise ValueError("weights omega must be positive")
    return (v - tau * u0) / (1.0 + tau / omega)


def resolvent_nonneg(y, d=0.0):
    """Resolvent of the indicator of ``[d, inf)``, independent of the step."""
    return np.maximum(y, d)


def project_linf_ball(w, lam):
    """Pointwise projection of 2-vectors (last axis) onto the ball of radius ``lam``."""
    _positive("lam", lam)
    w = np.asarray(w, dtype=np.float64)
    mag = np.sqrt(np.sum(w * w, axis=-1, keepdims=True))
    return w / np.maximum(1.0, mag / lam)


def soft_threshold_2d(u, tau):
    """Prox of ``tau |x|`` for 2-vectors along the last axis.

    Returns 0 where ``|u| <= tau`` and ``(1 - tau/|u|) u`` elsewhere.
    """
    _positive("tau", tau)
    u = np.asarray(u, dtype=np.float64)
    mag = np.sqrt(np.sum(u * u, axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > tau, 1.0 - tau / mag, 0.0)
    return factor * u


class FidelityKind(str, enum.Enum):
    SOFT = "soft"
    IGNORE = "ignore"
    FIT_EVERYWHERE = "fit-everywhere"
    HARD = "hard"
    WEIGHTED_SOFT = "weighted-soft"


_ALIASES = {"fitall": "fit-everywhere", "weighted": "weighted-soft"}


class DataFidelityVariant:
    """How sinogram data enter the problem on and off the constraint mask.

    =================  =======================  ====================
    kind               off the mask             on the mask
    =================  =======================  ====================
    soft               quadratic fit            ``R u >= C``
    ignore             quadratic fit            nothing
    fit-everywhere     quadratic fit            fit and ``R u >= C``
    hard               ``R u = u0``             ``R u >= C``
    weighted-soft      weighted quadratic fit   ``R u >= C``
    =================  =======================  ====================
    """

    __slots__ = ("kind", "weights")

    def __init__(self, kind="soft", weights=None):
        kind = _ALIASES.get(kind, kind) if isinstance(kind, str) else kind
        self.kind = FidelityKind(kind)
        if self.kind is FidelityKind.WEIGHTED_SOFT:
            if weights is None:
                raise ValueError("weighted-soft variant requires weights")
            weights = np.asarray(weights, dtype=np.float64)
            if not np.all(weights > 0):
                raise ValueError("weights must be positive")
        elif weights is not None:
            raise ValueError(f"weights are only meaningful for weighted-soft, not {self.kind.value}")
        self.weights = weights

    def __repr__(self):
        return f"DataFidelityVariant({self.kind.value!r})"

    def __eq__(self, other):
        if not isinstance(other, DataFidelityVariant):
            return NotImplemented
        if self.kind is not other.kind:
            return False
        if self.weights is None or other.weights is None:
            return self.weights is other.weights
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


def apply_data_resolvent(vbar, u0, mask: ConstraintMask, variant=None, tau=1.0):
    """Entrywise dual data resolvent selected by ``variant`` and ``mask``.

    Accepts arrays or :class:`Sinogram` objects for ``vbar`` and ``u0``; the
    return type follows ``vbar``.
    """
    variant = DataFidelityVariant() if variant is None else variant
    wrap = isinstance(vbar, Sinogram)
    v = vbar.data if wrap else np.asarray(vbar, dtype=np.float64)
    d = u0.data if isinstance(u0, Sinogram) else np.asarray(u0, dtype=np.float64)
    if v.shape != mask.mask.shape or d.shape != mask.mask.shape:
        raise GeometryError("sinogram, data and mask shapes disagree")
    m, C = mask.mask, mask.thresholds
    k = variant.kind
    if k is FidelityKind.WEIGHTED_SOFT:
        w = np.broadcast_to(variant.weights, v.shape)
        off = resolvent_weighted_quad(v, d, tau, w)
    elif k is FidelityKind.HARD:
        off = resolvent_hard_eq(v, d, tau)
    else:
        off = resolvent_quad_data(v, d, tau)
    if not m.any():
        out = off
    else:
        if k is FidelityKind.IGNORE:
            on = resolvent_ignore(v)
        elif k is FidelityKind.FIT_EVERYWHERE:
            on = resolvent_quad_plus_ineq(v, d, C, tau)
        else:
            on = resolvent_ineq_dual(v, C, tau)
        out = np.where(m, on, off)
    return Sinogram(vbar.geom, out) if wrap else out
