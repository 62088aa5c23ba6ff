"""Geometry descriptions and array containers.

Storage convention: an image ``u`` of an :class:`ImageGeom` is an ``(n, n)``
array where axis 0 is the pixel index ``i`` (x direction) and axis 1 is ``j``
(y direction). Pixel ``(i, j)`` (0-based) sits at
``x = h * (i + 1 - (n + 1) / 2)``, ``y = h * (j + 1 - (n + 1) / 2)``, so the
grid is centred on the origin. A sinogram is ``(N, M_det)``: one row per
angle, one column per detector bin.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "ImageGeom",
    "SinoGeom",
    "Image",
    "Sinogram",
    "GradientField",
    "ConstraintMask",
    "default_angles",
    "inner_image",
    "inner_grad",
    "one_norm_iso",
]


class GeometryError(ValueError):
    """Raised when two arrays or operators live on different grids."""


@dataclass(frozen=True)
class ImageGeom:
    """Square pixel grid with ``n`` pixels per side and spacing ``h``."""

    n: int
    h: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"image size must be an integer >= 2, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", float(self.h))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def coords(self):
        """1-D pixel-centre coordinates, shared by both axes."""
        return self.h * (np.arange(1, self.n + 1) - (self.n + 1) / 2.0)

    @property
    def radius(self):
        """Radius of the disk inscribed in the image square."""
        return self.n * self.h / 2.0


def default_angles(n_angles):
    """``n_angles`` equispaced angles covering the half-turn ``[0, pi)``."""
    return np.linspace(0.0, np.pi, int(n_angles), endpoint=False)


class SinoGeom:
    """Parallel-beam acquisition: angles, detector bin count and bin width.

    Bin ``b`` (0-based) is centred at ``s = delta_s * (b + 1/2 - m_det / 2)``,
    so the rotation centre falls exactly between the two middle bins.
    """

    __slots__ = ("angles", "m_det", "delta_s")

    def __init__(self, angles, m_det, delta_s=1.0):
        angles = np.array(angles, dtype=np.float64).ravel()
        if angles.size < 1:
            raise ValueError("at least one projection angle is required")
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        if angles.size > 1 and not np.all(np.diff(angles) > 0):
            raise ValueError("angles must be strictly increasing")
        if angles[-1] - angles[0] >= np.pi + 1e-12:
            raise ValueError("angles must lie within one half-turn")
        if int(m_det) != m_det or m_det < 2 or m_det % 2:
            raise ValueError(f"detector bin count must be even and >= 2, got {m_det}")
        if not delta_s > 0:
            raise ValueError(f"bin spacing must be positive, got {delta_s}")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "m_det", int(m_det))
        object.__setattr__(self, "delta_s", float(delta_s))

    def __setattr__(self, name, value):
        raise AttributeError("SinoGeom is immutable")

    @classmethod
    def uniform(cls, n_angles, m_det, delta_s=1.0):
        return cls(default_angles(n_angles), m_det, delta_s)

    @property
    def n_angles(self):
        return self.angles.size

    @property
    def shape(self):
        return (self.n_angles, self.m_det)

    @property
    def offsets(self):
        """Detector-bin centre offsets ``s``."""
        return self.delta_s * (np.arange(self.m_det) + 0.5 - self.m_det / 2.0)

    def __eq__(self, other):
        if not isinstance(other, SinoGeom):
            return NotImplemented
        return (
            self.m_det == other.m_det
            and self.delta_s == other.delta_s
            and np.array_equal(self.angles, other.angles)
        )

    def __hash__(self):
        return hash((self.m_det, self.delta_s, self.angles.tobytes()))

    def __repr__(self):
        return (
            f"SinoGeom(n_angles={self.n_angles}, m_det={self.m_det}, "
            f"delta_s={self.delta_s})"
        )


def _checked(data, shape, what):
    data = np.asarray(data, dtype=np.float64)
    if data.shape != tuple(shape):
        raise GeometryError(f"{what} data has shape {data.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{what} data contains non-finite values")
    return data


@dataclass(frozen=True, eq=False)
class Image:
    geom: ImageGeom
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _checked(self.data, self.geom.shape, "image"))


@dataclass(frozen=True, eq=False)
class Sinogram:
    geom: SinoGeom
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _checked(self.data, self.geom.shape, "sinogram"))


@dataclass(frozen=True, eq=False)
class GradientField:
    geom: ImageGeom
    data: np.ndarray

    def __post_init__(self):
        shape = self.geom.shape + (2,)
        object.__setattr__(self, "data", _checked(self.data, shape, "gradient field"))


@dataclass(frozen=True, eq=False)
class ConstraintMask:
    """Sinogram entries ``D0`` whose data are only known to exceed a threshold.

    ``thresholds`` carries the lower bound ``C`` per entry; values outside the
    mask are ignored and stored as zero.
    """

    geom: SinoGeom
    mask: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.geom.shape:
            raise GeometryError(f"mask has shape {mask.shape}, expected {self.geom.shape}")
        thr = np.broadcast_to(np.asarray(self.thresholds, dtype=np.float64), mask.shape)
        if not np.all(np.isfinite(thr[mask])):
            raise ValueError("thresholds must be finite on masked entries")
        thr = np.where(mask, thr, 0.0)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "thresholds", thr)

    @classmethod
    def empty(cls, geom):
        return cls(geom, np.zeros(geom.shape, bool), 0.0)

    @property
    def count(self):
        return int(self.mask.sum())

    def __bool__(self):
        return bool(self.mask.any())


def _same_geom(a, b):
    if a.geom != b.geom:
        raise GeometryError(f"geometry mismatch: {a.geom!r} vs {b.geom!r}")


def inner_image(a: Image, b: Image) -> float:
    """Euclidean scalar product of two images on the same grid."""
    _same_geom(a, b)
    return float(np.vdot(a.data, b.data))


def inner_grad(p: GradientField, q: GradientField) -> float:
    """Scalar product of gradient fields, summed over both channels."""
    _same_geom(p, q)
    return float(np.vdot(p.data, q.data))


def one_norm_iso(q) -> float:
    """Sum of pointwise Euclidean magnitudes (isotropic 1-norm)."""
    data = q.data if isinstance(q, GradientField) else np.asarray(q)
    return float(np.sqrt(data[..., 0] ** 2 + data[..., 1] ** 2).sum())
