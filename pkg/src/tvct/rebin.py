"""Fan-beam to parallel-beam rebinning.

A fan ray is labelled by the source angle ``phi`` and the angle ``alpha``
between the ray and the line from the source through the rotation centre.
With ``d`` the source-to-centre distance it is the parallel ray

    s = d sin(alpha),    theta = phi - pi/2 + alpha,

and rebinning evaluates the fan data at the inverse of this map by bilinear
interpolation (periodic in ``phi``, no extrapolation in ``alpha``).
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import ConstraintMask, SinoGeom, Sinogram

__all__ = [
    "FanGeom",
    "fan_to_para_coords",
    "para_to_fan_coords",
    "rebin_fan2para",
    "uncovered_constraint",
    "analytic_disk_fan",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class FanGeom:
    """Fan-beam acquisition.

    Parameters
    ----------
    d : float
        Source-to-centre distance.
    alphas : array_like
        Strictly increasing fan angles of the detector elements, ``|alpha| < pi/2``.
    phis : array_like
        Strictly increasing source angles within one turn.
    """

    d: float
    alphas: np.ndarray
    phis: np.ndarray

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("source distance d must be positive")
        a = np.array(self.alphas, dtype=np.float64).ravel()
        p = np.array(self.phis, dtype=np.float64).ravel()
        if a.size < 2 or p.size < 2:
            raise ValueError("need at least two detector elements and two views")
        if not (np.all(np.diff(a) > 0) and np.all(np.diff(p) > 0)):
            raise ValueError("fan and source angles must be strictly increasing")
        if np.max(np.abs(a)) >= math.pi / 2:
            raise ValueError("fan angles must satisfy |alpha| < pi/2")
        if p[-1] - p[0] >= TWO_PI:
            raise ValueError("source angles must lie within one turn")
        for arr in (a, p):
            arr.setflags(write=False)
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "phis", p)

    @classmethod
    def uniform(cls, d, n_det, fan_angle, n_views):
        """Equiangular detector spanning ``fan_angle`` and a full turn of views."""
        half = fan_angle / 2.0
        step = fan_angle / n_det
        alphas = -half + step * (np.arange(n_det) + 0.5)
        phis = np.linspace(0.0, TWO_PI, int(n_views), endpoint=False)
        return cls(d, alphas, phis)

    @property
    def shape(self):
        return (self.phis.size, self.alphas.size)

    @property
    def reach(self):
        """Largest parallel offset seen by the fan, ``d sin(max |alpha|)``."""
        return self.d * math.sin(float(np.max(np.abs(self.alphas))))


def fan_to_para_coords(s, theta, d):
    """Fan coordinates ``(alpha, phi)`` of the parallel ray ``(s, theta)``.

    ``phi`` is not reduced modulo ``2 pi``.

    Raises
    ------
    ValueError
        If ``|s| >= d`` ("offset beyond fan reach").
    """
    s = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(s) >= d):
        raise ValueError("offset beyond fan reach")
    alpha = np.arcsin(s / d)
    phi = theta + math.pi / 2 - alpha
    if alpha.ndim == 0 and np.ndim(phi) == 0:
        return float(alpha), float(phi)
    return alpha, phi


def para_to_fan_coords(alpha, phi, d):
    """Forward map ``(alpha, phi) -> (d sin alpha, phi - pi/2 + alpha)``."""
    return d * np.sin(alpha), phi - math.pi / 2 + alpha


def _phi_weights(phi, phis):
    # periodic linear interpolation weights on a (possibly non-uniform) grid
    ext = np.append(phis, phis[0] + TWO_PI)
    q = np.mod(phi - phis[0], TWO_PI) + phis[0]
    k = np.clip(np.searchsorted(ext, q, side="right") - 1, 0, phis.size - 1)
    w = (q - ext[k]) / (ext[k + 1] - ext[k])
    return k, (k + 1) % phis.size, w


def rebin_fan2para(fan_data, fan: FanGeom, target: SinoGeom):
    """Resample fan data onto a parallel geometry.

    Parameters
    ----------
    fan_data : array_like, shape ``fan.shape``
        Rows are views (``phis``), columns detector elements (``alphas``).
    fan : FanGeom
    target : SinoGeom

    Returns
    -------
    sino : Sinogram
        Interpolated data, zero where not covered.
    covered : ndarray of bool
        True where the target ray falls inside the fan's ``alpha`` range.

    Raises
    ------
    ValueError
        If the fan data has the wrong shape or no target entry is covered.
    """
    data = np.asarray(fan_data, dtype=np.float64)
    if data.shape != fan.shape:
        raise ValueError(f"fan data has shape {data.shape}, expected {fan.shape}")
    s = target.offsets[None, :]
    theta = target.angles[:, None]
    inside = np.abs(s) < fan.d
    alpha = np.arcsin(np.where(inside, s, 0.0) / fan.d)
    alpha = np.broadcast_to(alpha, target.shape)
    phi = theta + math.pi / 2 - alpha
    a = fan.alphas
    covered = np.broadcast_to(inside, target.shape) & (alpha >= a[0]) & (alpha <= a[-1])
    if not covered.any():
        raise ValueError("target geometry lies outside the fan coverage")

    ac = np.clip(alpha, a[0], a[-1])
    ka = np.clip(np.searchsorted(a, ac, side="right") - 1, 0, a.size - 2)
    wa = (ac - a[ka]) / (a[ka + 1] - a[ka])
    kp0, kp1, wp = _phi_weights(phi, fan.phis)

    out = (
        (1 - wp) * ((1 - wa) * data[kp0, ka] + wa * data[kp0, ka + 1])
        + wp * ((1 - wa) * data[kp1, ka] + wa * data[kp1, ka + 1])
    )
    out = np.where(covered, out, 0.0)
    return Sinogram(target, out), np.array(covered)


def uncovered_constraint(covered, geom: SinoGeom, lower=0.0):
    """Constraint mask that treats uncovered bins as unknown data ``>= lower``."""
    covered = np.asarray(covered, bool)
    return ConstraintMask(geom, ~covered, lower)


def analytic_disk_fan(fan: FanGeom, radius, value=1.0, center=(0.0, 0.0)):
    """Exact fan sinogram of a uniform disk from chord lengths."""
    alpha = fan.alphas[None, :]
    phi = fan.phis[:, None]
    s, theta = para_to_fan_coords(alpha, phi, fan.d)
    s = s - (center[0] * np.cos(theta) + center[1] * np.sin(theta))
    return value * 2.0 * np.sqrt(np.maximum(radius**2 - s**2, 0.0))
