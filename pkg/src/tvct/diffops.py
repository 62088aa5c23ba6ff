"""Finite-difference gradient, divergence and Laplacians.

Sign convention: ``laplacian_h(u) = div_h(grad_h(u))`` is negative
semi-definite, so ``-laplacian_h`` is the PSD operator ``grad_h^T grad_h``.
Every preconditioned operator in the package is written ``alpha R^*R - beta
laplacian_h`` with ``alpha, beta >= 0``.
"""

import numpy as np

__all__ = [
    "LAPLACIAN_KERNEL",
    "grad_h",
    "div_h",
    "laplacian_h",
    "periodic_laplacian",
    "dft_laplacian_symbol",
    "embed_kernel",
]

LAPLACIAN_KERNEL = np.array([[0.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 0.0]])
LAPLACIAN_KERNEL.setflags(write=False)


def grad_h(u, h=1.0):
    """Forward differences with Neumann boundary (zero in the last row/column).

    Returns an ``(n, n, 2)`` array; channel 0 differentiates along axis 0 (x),
    channel 1 along axis 1 (y).
    """
    u = np.asarray(u, dtype=np.float64)
    p = np.zeros(u.shape + (2,))
    p[:-1, :, 0] = u[1:, :] - u[:-1, :]
    p[:, :-1, 1] = u[:, 1:] - u[:, :-1]
    if h != 1.0:
        p /= h
    return p


def div_h(p, h=1.0):
    """Backward-difference divergence with Dirichlet boundary.

    Exact negative adjoint of :func:`grad_h`:
    ``<grad_h u, p> = -<u, div_h p>``.
    """
    p = np.asarray(p, dtype=np.float64)
    px = p[..., 0]
    py = p[..., 1]
    d = np.zeros(p.shape[:2])
    d[0, :] = px[0, :]
    d[1:-1, :] = px[1:-1, :] - px[:-2, :]
    d[-1, :] = -px[-2, :]
    d[:, 0] += py[:, 0]
    d[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
    d[:, -1] -= py[:, -2]
    if h != 1.0:
        d /= h
    return d


def laplacian_h(u, h=1.0):
    """Neumann Laplacian ``div_h(grad_h(u))`` (negative semi-definite)."""
    return div_h(grad_h(u, h), h)


def embed_kernel(kernel, shape):
    """Place a small centred stencil into an array of ``shape`` with its
    centre at index ``(0, 0)`` and wraparound for negative offsets."""
    kernel = np.asarray(kernel, dtype=np.float64)
    out = np.zeros(shape)
    ci, cj = kernel.shape[0] // 2, kernel.shape[1] // 2
    for a in range(kernel.shape[0]):
        for b in range(kernel.shape[1]):
            out[(a - ci) % shape[0], (b - cj) % shape[1]] += kernel[a, b]
    return out


def dft_laplacian_symbol(n):
    """DFT of the periodic Laplacian stencil on an ``n x n`` grid.

    Entry ``(i, j)`` equals ``4 sin^2(pi i / n) + 4 sin^2(pi j / n)``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    s = 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2
    return s[:, None] + s[None, :]


def periodic_laplacian(u):
    """Circular convolution of ``u`` with :data:`LAPLACIAN_KERNEL`.

    This is ``-Delta_p u``, i.e. positive semi-definite, and is evaluated by
    diagonalisation in the 2-D DFT basis.
    """
    u = np.asarray(u, dtype=np.float64)
    n0, n1 = u.shape
    if n0 == n1:
        sym = dft_laplacian_symbol(n0)
    else:
        sym = np.fft.fft2(embed_kernel(LAPLACIAN_KERNEL, u.shape)).real
    return np.fft.ifft2(np.fft.fft2(u) * sym).real
