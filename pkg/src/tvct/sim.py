"""Phantoms, metal inclusions, sinogram capping, noise and image metrics."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fbp import FilterKind, fbp_reconstruct
from .grid import ConstraintMask, GeometryError, Image, ImageGeom, Sinogram

__all__ = [
    "SHEPP_LOGAN_ELLIPSES",
    "Ellipse",
    "MetalSpec",
    "PhantomSpec",
    "shepp_logan",
    "disk",
    "metal_region",
    "insert_metal",
    "cap_sinogram",
    "add_noise",
    "estimate_metal_mask",
    "masked_rmse",
    "EmptyMaskWarning",
]


@dataclass(frozen=True)
class Ellipse:
    """Ellipse in normalised coordinates ``[-1, 1]^2``.

    ``rotation`` is in degrees, counter-clockwise from the x axis.
    """

    value: float
    a: float
    b: float
    x0: float
    y0: float
    rotation: float = 0.0

    def indicator(self, X, Y):
        t = math.radians(self.rotation)
        c, s = math.cos(t), math.sin(t)
        dx, dy = X - self.x0, Y - self.y0
        xr = c * dx + s * dy
        yr = -s * dx + c * dy
        return (xr / self.a) ** 2 + (yr / self.b) ** 2 <= 1.0


# the "modified" (high-contrast) ten-ellipse Shepp-Logan table; values in [0, 1]
SHEPP_LOGAN_ELLIPSES = (
    Ellipse(1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    Ellipse(-0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    Ellipse(-0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    Ellipse(-0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    Ellipse(0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    Ellipse(0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    Ellipse(0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    Ellipse(0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    Ellipse(0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    Ellipse(0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


@dataclass(frozen=True)
class MetalSpec:
    """Metal inclusion: an axis-aligned square (side in pixels) or an ellipse.

    ``center`` is in normalised coordinates. ``side`` defaults to ``n / 16``
    pixels (at least 1).
    """

    center: tuple = (0.3, -0.3)
    value: float = 3.0
    shape: str = "square"
    side: int | None = None
    axes: tuple = (0.06, 0.06)

    def __post_init__(self):
        if self.shape not in ("square", "ellipse"):
            raise ValueError(f"unknown metal shape {self.shape!r}")


@dataclass(frozen=True)
class PhantomSpec:
    n: int
    ellipses: tuple = SHEPP_LOGAN_ELLIPSES
    metal: MetalSpec | None = None
    h: float = 1.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("phantom size must be at least 16")
        if self.metal is not None:
            tissue_max = _render(self.n, self.ellipses).max()
            if not self.metal.value > tissue_max:
                raise ValueError("metal value must exceed the largest tissue value")


def _normalised_grid(n):
    # pixel centres mapped to [-1, 1]; axis 0 = x, axis 1 = y
    c = (np.arange(1, n + 1) - (n + 1) / 2.0) * (2.0 / n)
    return np.meshgrid(c, c, indexing="ij")


def _render(n, ellipses):
    X, Y = _normalised_grid(n)
    u = np.zeros((n, n))
    for e in ellipses:
        u[e.indicator(X, Y)] += e.value
    # drop round-off from the sums (1 - 0.8 - 0.2 is not exactly 0)
    return np.round(u, 12) + 0.0


def shepp_logan(spec) -> Image:
    """Render a phantom (Shepp-Logan by default) with optional metal.

    ``spec`` may be a :class:`PhantomSpec` or just the size ``n``.
    """
    if not isinstance(spec, PhantomSpec):
        spec = PhantomSpec(int(spec))
    img = Image(ImageGeom(spec.n, spec.h), _render(spec.n, spec.ellipses))
    return insert_metal(img, spec.metal) if spec.metal is not None else img


def disk(n, radius_frac=0.8, value=1.0, h=1.0) -> Image:
    """Centred disk of radius ``radius_frac * n h / 2``."""
    X, Y = _normalised_grid(n)
    return Image(ImageGeom(n, h), value * (X**2 + Y**2 <= radius_frac**2))


def metal_region(n, metal: MetalSpec):
    """Boolean ``(n, n)`` mask of the pixels covered by the inclusion."""
    cx, cy = metal.center
    if metal.shape == "ellipse":
        X, Y = _normalised_grid(n)
        region = Ellipse(1.0, metal.axes[0], metal.axes[1], cx, cy).indicator(X, Y)
    else:
        side = metal.side if metal.side is not None else max(1, round(n / 16))
        # index of the pixel nearest to the centre, then a side x side block
        ic = int(round((cx + 1.0) * n / 2.0 - 0.5))
        jc = int(round((cy + 1.0) * n / 2.0 - 0.5))
        i0, j0 = ic - side // 2, jc - side // 2
        if i0 < 0 or j0 < 0 or i0 + side > n or j0 + side > n:
            raise ValueError("metal region lies outside the grid")
        region = np.zeros((n, n), bool)
        region[i0 : i0 + side, j0 : j0 + side] = True
    if not region.any():
        raise ValueError("metal region lies outside the grid")
    return region


def insert_metal(u, metal: MetalSpec | None = None):
    """Overwrite the inclusion region with the metal value."""
    metal = metal or MetalSpec()
    data = u.data if isinstance(u, Image) else np.asarray(u, dtype=np.float64)
    out = data.copy()
    out[metal_region(data.shape[0], metal)] = metal.value
    return Image(u.geom, out) if isinstance(u, Image) else out


def cap_sinogram(v, cap, c_fraction=0.8):
    """Clip the sinogram at ``cap`` and mark the clipped entries.

    Returns the capped sinogram and a :class:`ConstraintMask` holding the
    entries that exceeded ``cap``, with thresholds ``c_fraction * cap``.
    """
    if not cap > 0:
        raise ValueError("cap must be positive")
    if not 0 < c_fraction <= 1:
        raise ValueError("c_fraction must lie in (0, 1]")
    data = v.data if isinstance(v, Sinogram) else np.asarray(v, dtype=np.float64)
    over = data > cap
    capped = np.minimum(data, cap)
    geom = v.geom if isinstance(v, Sinogram) else None
    if geom is None:
        raise TypeError("cap_sinogram needs a Sinogram (geometry required for the mask)")
    mask = ConstraintMask(geom, over, np.where(over, c_fraction * capped, 0.0))
    return Sinogram(geom, capped), mask


def add_noise(v, pct, seed=None):
    """Add i.i.d. Gaussian noise with std ``pct * std(v)``.

    ``pct`` is a fraction (0.05 for 5%).
    """
    if pct < 0:
        raise ValueError("noise level must be non-negative")
    data = v.data if isinstance(v, Sinogram) else np.asarray(v, dtype=np.float64)
    if pct == 0:
        out = data.copy()
    else:
        rng = np.random.default_rng(seed)
        out = data + rng.normal(0.0, pct * float(np.std(data)), size=data.shape)
    return Sinogram(v.geom, out) if isinstance(v, Sinogram) else out


class EmptyMaskWarning(UserWarning):
    """The metal-mask heuristic found no pixel above the threshold."""


def estimate_metal_mask(v, op, image_threshold, dilation_px=5, c_fraction=0.8, kind=FilterKind.RAM_LAK):
    """Locate metal traces in a sinogram.

    FBP-reconstruct ``v``, threshold at ``image_threshold``, dilate by
    ``dilation_px`` pixels with a square structuring element, forward
    project the binary image and mark bins where it exceeds 0.5.
    Thresholds on the mask are ``c_fraction * v``.
    """
    if dilation_px < 0:
        raise ValueError("dilation must be non-negative")
    data = v.data if isinstance(v, Sinogram) else np.asarray(v, dtype=np.float64)
    recon = fbp_reconstruct(data, op, kind)
    region = recon > image_threshold
    if dilation_px > 0 and region.any():
        region = ndimage.binary_dilation(region, structure=np.ones((2 * dilation_px + 1,) * 2, bool))
    if not region.any():
        warnings.warn("no pixel exceeds the metal threshold; mask is empty", EmptyMaskWarning, stacklevel=2)
        return ConstraintMask.empty(op.sino_geom)
    proj = op.forward(region.astype(np.float64)) / op.scale
    mask = proj > 0.5
    return ConstraintMask(op.sino_geom, mask, np.where(mask, c_fraction * data, 0.0))


def masked_rmse(a, b, exclude=None) -> float:
    """Root mean square difference over pixels not in ``exclude``."""
    da = a.data if isinstance(a, Image) else np.asarray(a, dtype=np.float64)
    db = b.data if isinstance(b, Image) else np.asarray(b, dtype=np.float64)
    if da.shape != db.shape:
        raise GeometryError("images differ in shape")
    keep = np.ones(da.shape, bool) if exclude is None else ~np.asarray(exclude, bool)
    if keep.shape != da.shape:
        raise GeometryError("exclusion mask differs in shape")
    if not keep.any():
        raise ValueError("no pixels left to evaluate")
    d = (da - db)[keep]
    return float(np.sqrt(np.mean(d * d)))
