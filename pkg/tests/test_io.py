import io
import json
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tvct.grid import ConstraintMask, Image, ImageGeom, SinoGeom, Sinogram
from tvct.io import (
    MAGIC,
    ArrayFormatError,
    ConfigError,
    RunConfig,
    decode_array,
    encode_array,
    export_pgm,
    read_array,
    write_array,
)

f32 = st.floats(-1e6, 1e6, width=32, allow_nan=False)


@given(hnp.arrays(np.float32, st.tuples(st.integers(2, 6), st.just(4)), elements=f32))
def test_sinogram_round_trip(a):
    g = SinoGeom.uniform(a.shape[0], 4, 0.75)
    back = decode_array(encode_array(Sinogram(g, a.astype(np.float64))))
    assert isinstance(back, Sinogram)
    assert back.geom.delta_s == 0.75 and back.geom.shape == a.shape
    np.testing.assert_array_equal(back.data, a)
    assert encode_array(back) == encode_array(Sinogram(g, a.astype(np.float64)))


def test_image_and_mask_round_trip(tmp_path, rng):
    img = Image(ImageGeom(5, 0.5), rng.normal(size=(5, 5)).astype(np.float32).astype(float))
    p = tmp_path / "img.tvct"
    write_array(img, p)
    back = read_array(p)
    assert isinstance(back, Image) and back.geom.h == 0.5
    np.testing.assert_array_equal(back.data, img.data)
    m = rng.random((3, 4)) < 0.5
    buf = io.BytesIO()
    write_array(m, buf)
    buf.seek(0)
    np.testing.assert_array_equal(read_array(buf), m)
    cm = ConstraintMask(SinoGeom.uniform(3, 4, 1.0), m, 1.0)
    np.testing.assert_array_equal(decode_array(encode_array(cm)), m)


def test_header_layout():
    blob = encode_array(Image(ImageGeom(2, 1.5), np.arange(4.0).reshape(2, 2)))
    magic, ver, kind, rows, cols, meta = struct.unpack_from("<4sIBIId", blob)
    assert (magic, ver, kind, rows, cols, meta) == (MAGIC, 1, 0, 2, 2, 1.5)
    assert len(blob) == struct.calcsize("<4sIBIId") + 16
    np.testing.assert_array_equal(np.frombuffer(blob[-16:], "<f4"), [0, 1, 2, 3])


def _blob():
    return encode_array(Image(ImageGeom(3, 1.0), np.ones((3, 3))))


def test_format_errors():
    good = _blob()
    cases = {
        b"XXXX" + good[4:]: "bad magic",
        good[:10]: "truncated header",
        good[:-1]: "truncated payload",
        good + b"\0": "trailing bytes",
    }
    for blob, msg in cases.items():
        with pytest.raises(ArrayFormatError, match=msg):
            decode_array(blob)
    bad = bytearray(good)
    bad[-4:] = struct.pack("<f", float("inf"))
    with pytest.raises(ArrayFormatError, match="non-finite"):
        decode_array(bytes(bad))
    bad = bytearray(good)
    bad[4:8] = struct.pack("<I", 2)
    with pytest.raises(ArrayFormatError, match="version"):
        decode_array(bytes(bad))
    bad = bytearray(good)
    bad[8] = 7
    with pytest.raises(ArrayFormatError, match="kind"):
        decode_array(bytes(bad))


def test_encode_rejects():
    # finite as a double, infinite as float32
    with pytest.raises(ArrayFormatError, match="non-finite"):
        encode_array(Image(ImageGeom(2), np.array([[1e39, 0], [0, 0]])))
    with pytest.raises(TypeError):
        encode_array(np.zeros((2, 2)))


def _read_pgm(blob):
    head, rest = blob.split(b"\n", 3)[:3], blob.split(b"\n", 3)[3]
    assert head[0] == b"P5" and head[2] == b"65535"
    cols, rows = map(int, head[1].split())
    return np.frombuffer(rest, ">u2").reshape(rows, cols)


def test_pgm_constant_and_range():
    buf = io.BytesIO()
    export_pgm(np.full((4, 4), 2.0), buf)
    pix = _read_pgm(buf.getvalue())
    assert np.all(pix == pix[0, 0])
    u = np.arange(16.0).reshape(4, 4)
    buf = io.BytesIO()
    export_pgm(u, buf)
    pix = _read_pgm(buf.getvalue())
    assert pix.min() == 0 and pix.max() == 65535


def test_pgm_window_and_orientation(tmp_path):
    u = np.zeros((3, 2))
    u[2, 0] = 10.0  # largest x, smallest y: bottom-right of the picture
    u[0, 1] = -5.0
    p = tmp_path / "a.pgm"
    export_pgm(u, p, window=(0.0, 1.0))
    pix = _read_pgm(p.read_bytes())
    assert pix.shape == (2, 3)
    assert pix[1, 2] == 65535 and pix[0, 0] == 0
    assert pix.max() == 65535 and np.sum(pix == 65535) == 1
    with pytest.raises(ValueError):
        export_pgm(u, p, window=(1.0, 1.0))


# configuration


def test_config_defaults_and_json(tmp_path):
    cfg = RunConfig()
    assert cfg.solver == "pdrq1" and cfg.lam == 0.3 and cfg.iters == 500
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"solver": "cp", "lam": 0.1, "iters": 7}))
    cfg = RunConfig.from_json(p)
    assert (cfg.solver, cfg.lam, cfg.iters) == ("cp", 0.1, 7)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        RunConfig.from_dict({"bogus": 1})
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.from_json(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.from_json(p)


def test_config_merge_precedence():
    cfg = RunConfig.from_dict({"lam": 0.1, "iters": 9})
    out = cfg.merged({"lam": 0.5, "iters": None, "solver": "admm"})
    assert (out.lam, out.iters, out.solver) == (0.5, 9, "admm")
    with pytest.raises(ConfigError):
        cfg.merged({"nope": 1})
