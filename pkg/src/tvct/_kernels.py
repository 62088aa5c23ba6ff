"""Hot loops of the discrete Radon transform.

Two interchangeable implementations of the splatting projector and its
adjoint:

* ``*_nb`` -- matrix-free numba kernels that recompute the bin index and
  weight for every (angle, pixel) pair on the fly;
* ``*_np`` -- numpy code driven by a precomputed sparse table and
  ``np.bincount``.

Both evaluate ``sigma = (x cos t + y sin t) / ds - 1/2``; the lower bin is
``floor(sigma) + M/2`` (0-based) and receives weight ``1 - alpha`` with
``alpha = sigma - floor(sigma)``, the upper bin receives ``alpha``.
"""

import math

import numpy as np

from ._accel import njit

__all__ = [
    "projection_table",
    "forward_np",
    "adjoint_np",
    "forward_nb",
    "adjoint_nb",
]


def bin_weights(x, y, cos_t, sin_t, delta_s, m_det):
    """Vectorised (lower bin, alpha) for points ``(x, y)`` at one angle."""
    sig = (x * cos_t + y * sin_t) / delta_s - 0.5
    fl = np.floor(sig)
    return fl.astype(np.int64) + m_det // 2, sig - fl


def projection_table(n, h, angles, m_det, delta_s):
    """Sparse (sinogram index, pixel index, weight) triplets of ``R_h``.

    Entries whose bin falls off the detector are dropped.
    """
    coords = h * (np.arange(1, n + 1) - (n + 1) / 2.0)
    x = np.repeat(coords, n)
    y = np.tile(coords, n)
    pix = np.arange(n * n)
    rows, cols, vals = [], [], []
    for l, t in enumerate(angles):
        k, a = bin_weights(x, y, math.cos(t), math.sin(t), delta_s, m_det)
        for kk, ww in ((k, 1.0 - a), (k + 1, a)):
            ok = (kk >= 0) & (kk < m_det)
            rows.append(l * m_det + kk[ok])
            cols.append(pix[ok])
            vals.append(ww[ok])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def forward_np(u, table, n_angles, m_det):
    rows, cols, vals = table
    out = np.bincount(rows, weights=vals * u.ravel()[cols], minlength=n_angles * m_det)
    return out.reshape(n_angles, m_det)


def adjoint_np(v, table, n):
    rows, cols, vals = table
    return np.bincount(cols, weights=vals * v.ravel()[rows], minlength=n * n).reshape(n, n)


@njit
def forward_nb(u, h, angles, m_det, delta_s):
    n = u.shape[0]
    n_ang = angles.shape[0]
    out = np.zeros((n_ang, m_det))
    c0 = (n + 1) / 2.0
    half = m_det // 2
    for l in range(n_ang):
        ct = math.cos(angles[l])
        st = math.sin(angles[l])
        for i in range(n):
            x = h * (i + 1 - c0)
            for j in range(n):
                val = u[i, j]
                if val == 0.0:
                    continue
                y = h * (j + 1 - c0)
                sig = (x * ct + y * st) / delta_s - 0.5
                fl = math.floor(sig)
                a = sig - fl
                k = int(fl) + half
                if 0 <= k < m_det:
                    out[l, k] += (1.0 - a) * val
                if 0 <= k + 1 < m_det:
                    out[l, k + 1] += a * val
    return out


@njit
def adjoint_nb(v, n, h, angles, delta_s):
    n_ang, m_det = v.shape
    out = np.zeros((n, n))
    c0 = (n + 1) / 2.0
    half = m_det // 2
    for l in range(n_ang):
        ct = math.cos(angles[l])
        st = math.sin(angles[l])
        for i in range(n):
            x = h * (i + 1 - c0)
            for j in range(n):
                y = h * (j + 1 - c0)
                sig = (x * ct + y * st) / delta_s - 0.5
                fl = math.floor(sig)
                a = sig - fl
                k = int(fl) + half
                acc = 0.0
                if 0 <= k < m_det:
                    acc += (1.0 - a) * v[l, k]
                if 0 <= k + 1 < m_det:
                    acc += a * v[l, k + 1]
                out[i, j] += acc
    return out
