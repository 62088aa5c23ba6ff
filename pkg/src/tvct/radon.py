"""Matrix-free discrete Radon transform and operator-norm tools.

Detector layout for ``m_det = 8`` (0-based bins, ``ds`` = bin width)::

      bin:   0    1    2    3 | 4    5    6    7
      s:   -3.5 -2.5 -1.5 -0.5|0.5  1.5  2.5  3.5   (times ds)
                              ^ rotation centre

A pixel projecting to offset ``s`` has ``sigma = s / ds - 1/2``; its value is
split between bins ``floor(sigma) + 4`` and the next one, by linear
interpolation weights. A pixel at the centre lands half in bin 3, half in
bin 4.
"""

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from ._accel import BACKEND, HAVE_NUMBA
from .grid import GeometryError, Image, ImageGeom, Sinogram, SinoGeom

__all__ = [
    "OFF_DETECTOR",
    "RadonOp",
    "BoundInapplicable",
    "project_offset",
    "forward",
    "adjoint",
    "norm_bound",
    "power_iteration",
    "rescale_to_unit",
]

OFF_DETECTOR = -1


class BoundInapplicable(ValueError):
    """The closed-form norm bound needs ``delta_s < h * sqrt(2)``."""


@dataclass(frozen=True, eq=False)
class RadonOp:
    """Discrete parallel-beam Radon transform ``scale * R_h`` and its adjoint.

    Parameters
    ----------
    image_geom : ImageGeom
    sino_geom : SinoGeom
    scale : float, optional
        Positive multiplier applied to both :meth:`forward` and
        :meth:`adjoint`; :func:`rescale_to_unit` uses it to normalise the
        operator.
    backend : {'numba', 'numpy'}, optional
        Kernel implementation; defaults to the process-wide choice made from
        the ``TVCT_BACKEND`` environment variable.
    """

    image_geom: ImageGeom
    sino_geom: SinoGeom
    scale: float = 1.0
    backend: str = BACKEND

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.backend not in ("numba", "numpy"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "numba" and not HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not installed")

    @classmethod
    def create(cls, n, n_angles, m_det=None, h=1.0, delta_s=None, **kwargs):
        """Operator on an ``n x n`` grid with ``n_angles`` angles over a
        half-turn. Defaults: ``delta_s = h`` and ``m_det = 2 n``."""
        delta_s = h if delta_s is None else delta_s
        m_det = 2 * n if m_det is None else m_det
        return cls(ImageGeom(n, h), SinoGeom.uniform(n_angles, m_det, delta_s), **kwargs)

    @property
    def domain_shape(self):
        return self.image_geom.shape

    @property
    def range_shape(self):
        return self.sino_geom.shape

    @functools.cached_property
    def _table(self):
        g, s = self.image_geom, self.sino_geom
        return _kernels.projection_table(g.n, g.h, s.angles, s.m_det, s.delta_s)

    def _raw_forward(self, u):
        g, s = self.image_geom, self.sino_geom
        if self.backend == "numba":
            return _kernels.forward_nb(u, g.h, s.angles, s.m_det, s.delta_s)
        return _kernels.forward_np(u, self._table, s.n_angles, s.m_det)

    def _raw_adjoint(self, v):
        g, s = self.image_geom, self.sino_geom
        if self.backend == "numba":
            return _kernels.adjoint_nb(v, g.n, g.h, s.angles, s.delta_s)
        return _kernels.adjoint_np(v, self._table, g.n)

    def forward(self, u):
        """Apply ``scale * R_h`` to an image array (or :class:`Image`)."""
        if isinstance(u, Image):
            if u.geom != self.image_geom:
                raise GeometryError("image geometry does not match the operator")
            return Sinogram(self.sino_geom, self.forward(u.data))
        u = np.ascontiguousarray(u, dtype=np.float64)
        if u.shape != self.domain_shape:
            raise GeometryError(f"image shape {u.shape} != {self.domain_shape}")
        out = self._raw_forward(u)
        return out * self.scale if self.scale != 1.0 else out

    def adjoint(self, v):
        """Apply ``scale * R_h^*`` (interpolating backprojection)."""
        if isinstance(v, Sinogram):
            if v.geom != self.sino_geom:
                raise GeometryError("sinogram geometry does not match the operator")
            return Image(self.image_geom, self.adjoint(v.data))
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.shape != self.range_shape:
            raise GeometryError(f"sinogram shape {v.shape} != {self.range_shape}")
        out = self._raw_adjoint(v)
        return out * self.scale if self.scale != 1.0 else out

    def normal(self, u):
        """``R^* R u`` for the scaled operator."""
        return self.adjoint(self.forward(u))

    def project_offset(self, i, j, l):
        return project_offset(i, j, l, self)

    def norm_bound(self):
        return norm_bound(self)

    def with_scale(self, scale):
        return replace(self, scale=float(scale))

    def with_backend(self, backend):
        return replace(self, backend=backend)


def project_offset(i, j, l, op):
    """Lower detector bin and interpolation weight of pixel ``(i, j)`` at
    angle ``l`` (all 0-based).

    Returns ``(k, alpha)``: bin ``k`` receives ``1 - alpha`` of the pixel
    value and bin ``k + 1`` receives ``alpha``. When neither bin lies on the
    detector, ``k`` is :data:`OFF_DETECTOR`.
    """
    g, s = op.image_geom, op.sino_geom
    if not (0 <= i < g.n and 0 <= j < g.n and 0 <= l < s.n_angles):
        raise IndexError("pixel or angle index out of range")
    x, y = g.coords[i], g.coords[j]
    t = s.angles[l]
    k, a = _kernels.bin_weights(
        np.float64(x), np.float64(y), math.cos(t), math.sin(t), s.delta_s, s.m_det
    )
    k, a = int(k), float(a)
    if k + 1 < 0 or k >= s.m_det:
        return OFF_DETECTOR, 0.0
    return k, a


def forward(u, op):
    return op.forward(u)


def adjoint(v, op):
    return op.adjoint(v)


def norm_bound(op):
    """Closed-form upper bound ``scale * sqrt(2 N (sqrt(2) n + 1))`` on the
    operator norm, valid when the bin width is below ``h * sqrt(2)``."""
    g, s = op.image_geom, op.sino_geom
    if not s.delta_s < g.h * math.sqrt(2.0):
        raise BoundInapplicable(
            f"bound inapplicable: delta_s={s.delta_s} is not below h*sqrt(2)={g.h * math.sqrt(2.0)}"
        )
    return op.scale * math.sqrt(2.0 * s.n_angles * (math.sqrt(2.0) * g.n + 1.0))


def power_iteration(apply, shape, iters=200, seed=0):
    """Largest eigenvalue of a symmetric positive semi-definite operator.

    Parameters
    ----------
    apply : callable
        Maps an array of ``shape`` to an array of the same shape.
    shape : tuple of int
    iters : int
        Number of operator applications (>= 1).
    seed : int
        Seed of the random start vector.

    Returns
    -------
    float
        The largest Rayleigh quotient seen, which never decreases with
        ``iters`` and never exceeds the true eigenvalue.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    best = 0.0
    reseeded = False
    for _ in range(iters):
        nx = np.linalg.norm(x)
        if nx == 0.0 or not np.isfinite(nx):
            if reseeded:
                raise ValueError("power iteration collapsed to the zero vector twice")
            reseeded = True
            x = rng.standard_normal(shape)
            continue
        x = x / nx
        y = apply(x)
        best = max(best, float(np.vdot(x, y)))
        x = y
    return best


def rescale_to_unit(op):
    """Return ``(op / beta, beta)`` with ``beta`` the closed-form norm bound.

    Callers rescale data by ``1/beta``, the regularisation weight by
    ``1/beta**2`` and constraint thresholds by ``1/beta``.
    """
    beta = norm_bound(op)
    return op.with_scale(op.scale / beta), beta
