"""Array files, PGM export and run configuration.

Array file layout (little-endian throughout)::

    magic    4 bytes   b"TVCT"
    version  uint32    1
    kind     uint8     0 image, 1 sinogram, 2 mask
    rows     uint32
    cols     uint32
    meta     float64   h (image), delta_s (sinogram), 0 (mask)
    payload  rows * cols float32, row-major; masks store 0.0 / 1.0

Sinogram files do not carry angles: a sinogram read back is assumed to use
equispaced angles over the half-turn.
"""

import json
import struct
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .grid import ConstraintMask, Image, ImageGeom, SinoGeom, Sinogram

__all__ = [
    "MAGIC",
    "VERSION",
    "ArrayFormatError",
    "write_array",
    "read_array",
    "encode_array",
    "decode_array",
    "export_pgm",
    "RunConfig",
    "ConfigError",
]

MAGIC = b"TVCT"
VERSION = 1
_HEADER = struct.Struct("<4sIBIId")
KIND_IMAGE, KIND_SINO, KIND_MASK = 0, 1, 2


class ArrayFormatError(ValueError):
    """Malformed array file."""


def _classify(value):
    if isinstance(value, Image):
        return KIND_IMAGE, value.data, value.geom.h
    if isinstance(value, Sinogram):
        return KIND_SINO, value.data, value.geom.delta_s
    if isinstance(value, ConstraintMask):
        return KIND_MASK, value.mask.astype(np.float64), 0.0
    arr = np.asarray(value)
    if arr.dtype == bool:
        return KIND_MASK, arr.astype(np.float64), 0.0
    raise TypeError("expected an Image, Sinogram, ConstraintMask or boolean array")


def encode_array(value) -> bytes:
    """Serialise to the array file format (payload rounded to float32)."""
    kind, data, meta = _classify(value)
    if data.ndim != 2:
        raise ValueError("only 2-D arrays can be stored")
    with np.errstate(over="ignore"):
        payload = np.ascontiguousarray(data, dtype="<f4")
    # checked after the cast: large finite doubles overflow to inf
    if not np.all(np.isfinite(payload)):
        raise ArrayFormatError("non-finite values cannot be stored")
    rows, cols = data.shape
    head = _HEADER.pack(MAGIC, VERSION, kind, rows, cols, float(meta))
    return head + payload.tobytes()


def decode_array(buf: bytes):
    """Inverse of :func:`encode_array`.

    Returns an :class:`Image`, a :class:`Sinogram` or a boolean ndarray.
    """
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise ArrayFormatError("bad magic")
    if len(buf) < _HEADER.size:
        raise ArrayFormatError("truncated header")
    _, version, kind, rows, cols, meta = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise ArrayFormatError(f"unsupported version {version}")
    if kind not in (KIND_IMAGE, KIND_SINO, KIND_MASK):
        raise ArrayFormatError(f"unknown kind {kind}")
    need = rows * cols * 4
    payload = buf[_HEADER.size :]
    if len(payload) < need:
        raise ArrayFormatError("truncated payload")
    if len(payload) > need:
        raise ArrayFormatError("trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    if not np.all(np.isfinite(data)):
        raise ArrayFormatError("non-finite values in payload")
    data = data.astype(np.float64)
    if kind == KIND_IMAGE:
        if rows != cols:
            raise ArrayFormatError("image payload must be square")
        return Image(ImageGeom(rows, meta), data)
    if kind == KIND_SINO:
        return Sinogram(SinoGeom.uniform(rows, cols, meta), data)
    if not np.all((data == 0.0) | (data == 1.0)):
        raise ArrayFormatError("mask payload must hold 0.0 or 1.0")
    return data == 1.0


def write_array(value, path):
    """Write ``value`` to ``path`` ('-' or None for stdout, or a binary stream)."""
    blob = encode_array(value)
    if path in (None, "-"):
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
    elif hasattr(path, "write"):
        path.write(blob)
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


def read_array(path):
    """Read an array file ('-' or None for stdin, or a binary stream)."""
    if path in (None, "-"):
        return decode_array(sys.stdin.buffer.read())
    if hasattr(path, "read"):
        return decode_array(path.read())
    with open(path, "rb") as fh:
        return decode_array(fh.read())


def export_pgm(u, path, window=None):
    """Write a 16-bit binary PGM.

    Values are mapped affinely from ``window = (lo, hi)`` (default: the data
    range) to ``0..65535`` and clamped. The picture shows ``x`` to the right
    and ``y`` upwards.
    """
    data = u.data if isinstance(u, Image) else np.asarray(u, dtype=np.float64)
    if window is None:
        lo, hi = float(data.min()), float(data.max())
    else:
        lo, hi = map(float, window)
        if not lo < hi:
            raise ValueError("window must satisfy lo < hi")
    if hi > lo:
        scaled = (data - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(data)
    pix = np.rint(np.clip(scaled, 0.0, 1.0) * 65535).astype(">u2")
    pix = pix.T[::-1]
    rows, cols = pix.shape
    blob = f"P5\n{cols} {rows}\n65535\n".encode("ascii") + pix.tobytes()
    if hasattr(path, "write"):
        path.write(blob)
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Reconstruction settings.

    Defaults: ``solver='pdrq1'``, ``precond='inverse-norm'``,
    ``variant='soft'``, ``lam=0.3``, ``sigma``/``tau``/``tau_grad`` chosen by
    the solver (None), ``mu=1``, ``admm_mu=1``, ``iters=500``, ``tol=1e-6``,
    ``seed=0``, ``c_fraction=0.8``, ``rescale=True``, ``trace_every=1``,
    ``init='zero'`` (or ``'fbp'``), no file paths.
    ``tau`` is the CP primal step; ``tau_grad`` the gradient scaling.
    """

    solver: str = "pdrq1"
    precond: str = "inverse-norm"
    variant: str = "soft"
    lam: float = 0.3
    sigma: float | None = None
    tau: float | None = None
    tau_grad: float | None = None
    mu: float = 1.0
    admm_mu: float = 1.0
    pcg_iters: int = 2
    iters: int = 500
    tol: float = 1e-6
    seed: int = 0
    c_fraction: float = 0.8
    eps: float = 1.0
    rescale: bool = True
    trace_every: int = 1
    init: str = "zero"
    input: str | None = None
    mask: str | None = None
    output: str | None = None
    trace: str | None = None

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    def merged(self, overrides):
        """Copy with the non-None entries of ``overrides`` applied."""
        over = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(over) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return replace(self, **over)

    def to_dict(self):
        return asdict(self)
