"""Fourier-diagonal preconditioners for ``T = s I + alpha R^*R - beta Lap_h``.

All preconditioners ``M`` here are circulant, so ``M^{-1} y`` is one FFT, a
pointwise division by a real positive *symbol*, and an inverse FFT.

richardson
    ``M = m I`` with ``m`` 5% above the power-iteration estimate of ``|T|``.
inverse-norm
    ``R^*R`` is approximated by convolution with ``1 / |x|``, whose Fourier
    transform is again ``1 / |xi|``; the symbol is ``alpha c / |x|_eps``.
impulse
    ``R^*R`` is approximated by convolution with its own (symmetrised)
    response to a point source near the image centre.
circulant
    Same idea on the flattened ``n^2`` vector with a 1-D circulant matrix.

For the last three, ``-Lap_h`` is dominated by the periodic Laplacian and
``c`` is calibrated so that ``c M0 >= R^*R``; together ``M >= T``.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .diffops import dft_laplacian_symbol, laplacian_h
from .radon import power_iteration

__all__ = [
    "PRECOND_KINDS",
    "PrecondSpec",
    "FrequencyTables",
    "Preconditioner",
    "CalibrationError",
    "dft2",
    "idft2",
    "richardson",
    "inv_norm_apply",
    "impulse_kernel",
    "circulant_kernel",
    "calibrate",
    "nonneg_variant_apply",
    "make_preconditioner",
    "SAFETY",
    "SYMBOL_FLOOR",
]

PRECOND_KINDS = ("richardson", "inverse-norm", "impulse", "circulant")
_KIND_ALIASES = {"invnorm": "inverse-norm", "inv-norm": "inverse-norm"}
SAFETY = 1.05
# relative floor on kernel symbols; small negative eigenvalues from edge
# truncation otherwise blow up the calibration constant
SYMBOL_FLOOR = 1e-2


class CalibrationError(RuntimeError):
    """Power iteration could not produce a usable calibration constant."""


def dft2(u):
    """Unnormalised 2-D DFT (numpy convention)."""
    return np.fft.fft2(u)


def idft2(U):
    """Inverse of :func:`dft2`; returns the real part."""
    return np.fft.ifft2(U).real


@dataclass(frozen=True)
class FrequencyTables:
    """Symbols on the ``n x n`` DFT grid.

    ``lap_symbol`` is the DFT of the periodic Laplacian stencil and
    ``radial`` holds ``sqrt(d^2 + eps^2)`` with ``d`` the wrapped index
    distance of each frequency to the origin.
    """

    n: int
    eps: float = 1.0
    lap_symbol: np.ndarray = field(init=False, repr=False)
    radial: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        idx = np.arange(self.n)
        w = np.minimum(idx, self.n - idx).astype(np.float64)
        d2 = w[:, None] ** 2 + w[None, :] ** 2
        object.__setattr__(self, "lap_symbol", dft_laplacian_symbol(self.n))
        object.__setattr__(self, "radial", np.sqrt(d2 + self.eps**2))


@dataclass(frozen=True)
class PrecondSpec:
    """Parameters of a preconditioner.

    Attributes
    ----------
    kind : str
        One of :data:`PRECOND_KINDS`.
    alpha, beta : float
        Weights of ``R^*R`` and ``-Lap_h`` in the target operator.
    eps : float
        Smoothing of the radial table (inverse-norm only).
    c : float or None
        Calibration constant; ``None`` until :func:`calibrate` has run.
    shift : float
        Multiple of the identity added to both ``T`` and ``M``.
    """

    kind: str
    alpha: float
    beta: float
    eps: float = 1.0
    c: float | None = None
    shift: float = 0.0

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in PRECOND_KINDS:
            raise ValueError(f"unknown preconditioner {self.kind!r}; expected one of {PRECOND_KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.alpha < 0 or self.beta < 0 or self.shift < 0:
            raise ValueError("alpha, beta and shift must be non-negative")
        if self.alpha + self.beta + self.shift <= 0:
            raise ValueError("alpha + beta must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def calibrated(self):
        return self.c is not None


def _target_operator(op, alpha, beta, shift=0.0):
    """``shift I + alpha R^*R - beta Lap_h`` as a callable."""
    h = op.image_geom.h

    def apply(x):
        out = alpha * op.normal(x) if alpha else np.zeros_like(x)
        if beta:
            out = out - beta * laplacian_h(x, h)
        if shift:
            out = out + shift * x
        return out

    return apply


def _symmetrise_2d(k):
    # transpose and point reflection about (0, 0): the DFT becomes real
    refl = np.roll(k[::-1, ::-1], 1, axis=(0, 1))
    s = k + refl
    return 0.25 * (s + s.T)  # exactly symmetric: float addition commutes


def impulse_kernel(op):
    """Symmetrised response of ``R^*R`` to a unit impulse, centred at (0, 0).

    The impulse sits at 0-based index ``(n // 2, n // 2)``, the lower-right
    of the four central pixels for even ``n`` and the central pixel for odd
    ``n``.
    """
    n = op.image_geom.n
    c = n // 2
    delta = np.zeros((n, n))
    delta[c, c] = 1.0
    resp = np.roll(op.normal(delta), (-c, -c), axis=(0, 1))
    return _symmetrise_2d(resp)


def _symmetrise_flat(k):
    return 0.5 * (k + np.roll(k[::-1], 1))


def circulant_kernel(op):
    """First column of the circulant approximation of ``R^*R`` on the
    flattened image, and the matching Laplace column.

    Returns
    -------
    k, lap : ndarray
        Length ``n^2`` vectors with ``k[i] == k[(n^2 - i) % n^2]``.
    """
    n = op.image_geom.n
    h = op.image_geom.h
    c = (n // 2) * n + n // 2
    delta = np.zeros(n * n)
    delta[c] = 1.0
    d2 = delta.reshape(n, n)
    k = np.roll(op.normal(d2).ravel(), -c)
    lap = np.roll(-laplacian_h(d2, h).ravel(), -c)
    return _symmetrise_flat(k), _symmetrise_flat(lap)


class Preconditioner:
    """A calibrated circulant preconditioner.

    Parameters
    ----------
    spec : PrecondSpec
        Calibrated specification.
    symbol : ndarray
        Real positive eigenvalues of ``M`` in the DFT basis; shape ``(n, n)``
        or ``(n*n,)`` for the flattened circulant.
    shape : tuple
        Image shape.
    """

    def __init__(self, spec, symbol, shape):
        symbol = np.asarray(symbol, dtype=np.float64)
        if not np.all(np.isfinite(symbol)) or np.any(symbol <= 0):
            raise ValueError("preconditioner symbol must be finite and positive")
        self.spec = spec
        self.symbol = symbol
        self.shape = tuple(shape)

    @property
    def flat(self):
        return self.symbol.ndim == 1

    def _diag(self, y, mult):
        y = np.asarray(y, dtype=np.float64)
        if self.flat:
            return np.fft.ifft(np.fft.fft(y.ravel()) * mult).real.reshape(self.shape)
        return idft2(dft2(y) * mult)

    def apply_inverse(self, y):
        """``M^{-1} y``."""
        return self._diag(y, 1.0 / self.symbol)

    def apply(self, x):
        """``M x``."""
        return self._diag(x, self.symbol)

    __call__ = apply_inverse

    def __repr__(self):
        return f"Preconditioner({self.spec!r})"


def richardson(op_T, shape, seed=0, iters=200):
    """``M = m I`` with ``m = 1.05`` times the power-iteration norm of ``op_T``."""
    m = SAFETY * power_iteration(op_T, shape, iters=iters, seed=seed)
    if not m > 0:
        raise CalibrationError("operator has no positive eigenvalue")
    spec = PrecondSpec("richardson", alpha=1.0, beta=0.0, c=m)
    return Preconditioner(spec, np.full(shape, m), shape)


def generalized_power_iteration(apply_A, apply_M0_inv, apply_M0, shape, iters=200, seed=0):
    """Largest generalised Rayleigh quotient ``<A x, x> / <M0 x, x>``.

    Iterates ``x <- M0^{-1} A x``, i.e. power iteration on ``M0^{-1} A`` in
    the ``M0`` inner product, keeping the largest quotient seen.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    best = 0.0
    for _ in range(iters):
        mx = apply_M0(x)
        den = float(np.vdot(x, mx))
        if not (math.isfinite(den) and den > 0):
            raise CalibrationError("power iteration diverged: M0 is not positive definite")
        x = x / math.sqrt(den)
        ax = apply_A(x)
        q = float(np.vdot(x, ax))
        if not math.isfinite(q):
            raise CalibrationError("power iteration diverged")
        best = max(best, q)
        x = apply_M0_inv(ax)
        if not np.any(x):
            x = rng.standard_normal(shape)
    return best


def _base_symbol(kind, op, eps):
    """Symbol of the uncalibrated ``M0`` approximating ``R^*R``."""
    n = op.image_geom.n
    if kind == "inverse-norm":
        return 1.0 / FrequencyTables(n, eps).radial
    if kind == "impulse":
        sym = dft2(impulse_kernel(op)).real
    else:
        k, _ = circulant_kernel(op)
        sym = np.fft.fft(k).real
    return np.maximum(sym, SYMBOL_FLOOR * sym.max())


def _lap_symbol(kind, op):
    n = op.image_geom.n
    h = op.image_geom.h
    if kind == "circulant":
        _, lap = circulant_kernel(op)
        return np.fft.fft(lap).real
    return dft_laplacian_symbol(n) / h**2


def calibrate(spec, op, iters=200, seed=0):
    """Fill in ``spec.c``.

    For richardson ``c`` is the identity multiple ``m``; otherwise ``c`` is
    1.05 times the largest eigenvalue of ``M0^{-1} R^*R``.
    """
    shape = op.image_geom.shape
    if spec.kind == "richardson":
        T = _target_operator(op, spec.alpha, spec.beta, spec.shift)
        m = SAFETY * power_iteration(T, shape, iters=iters, seed=seed)
        if not m > 0:
            raise CalibrationError("operator has no positive eigenvalue")
        return replace(spec, c=m)
    base = _base_symbol(spec.kind, op, spec.eps)
    tmp = Preconditioner(spec, base, shape)
    lam = generalized_power_iteration(op.normal, tmp.apply_inverse, tmp.apply, shape, iters, seed)
    if not lam > 0:
        raise CalibrationError("R^*R has no positive eigenvalue")
    return replace(spec, c=SAFETY * lam)


def _full_symbol(spec, op):
    if spec.c is None:
        raise ValueError("preconditioner spec is not calibrated")
    if spec.kind == "richardson":
        return np.full(op.image_geom.shape, spec.c)
    base = _base_symbol(spec.kind, op, spec.eps)
    sym = spec.shift + spec.alpha * spec.c * base + spec.beta * _lap_symbol(spec.kind, op)
    if spec.kind == "circulant" and np.any(np.abs(sym) <= 1e-14 * np.abs(sym).max()):
        raise ValueError("singular circulant symbol")
    return sym


def make_preconditioner(kind, op, alpha, beta, eps=1.0, shift=0.0, iters=200, seed=0, c=None):
    """Build and calibrate a preconditioner for ``shift I + alpha R^*R - beta Lap_h``.

    ``c`` skips calibration when given (e.g. reusing a stored constant).
    """
    spec = PrecondSpec(kind, alpha, beta, eps=eps, shift=shift, c=c)
    if c is None:
        spec = calibrate(spec, op, iters=iters, seed=seed)
    return Preconditioner(spec, _full_symbol(spec, op), op.image_geom.shape)


def inv_norm_apply(y, spec, tables):
    """``M^{-1} y`` for the inverse-norm preconditioner.

    Symbol ``alpha c / |x|_eps + beta lap_symbol`` (unit grid spacing).
    """
    if spec.c is None:
        raise ValueError("preconditioner spec is not calibrated")
    sym = spec.shift + spec.alpha * spec.c / tables.radial + spec.beta * tables.lap_symbol
    return idft2(dft2(y) / sym)


def nonneg_variant_apply(y, spec, tables, sigma, tau, c):
    """Inverse-norm preconditioner augmented by the identity.

    Symbol ``1 + c sigma^2 / |x|_eps + (sigma tau)^2 lap_symbol``, matching
    ``T = I + sigma^2 (R^*R - tau^2 Lap_h)``.
    """
    sym = 1.0 + c * sigma**2 / tables.radial + (sigma * tau) ** 2 * tables.lap_symbol
    return idft2(dft2(y) / sym)
