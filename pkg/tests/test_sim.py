import warnings

import numpy as np
import pytest

from tvct.grid import ConstraintMask, Image, ImageGeom, SinoGeom, Sinogram
from tvct.radon import RadonOp
from tvct.sim import (
    SHEPP_LOGAN_ELLIPSES,
    EmptyMaskWarning,
    Ellipse,
    MetalSpec,
    PhantomSpec,
    add_noise,
    cap_sinogram,
    disk,
    estimate_metal_mask,
    insert_metal,
    masked_rmse,
    metal_region,
    shepp_logan,
)


def test_shepp_logan_range():
    u = shepp_logan(64).data
    assert u.min() >= 0 and u.max() <= 1


def test_shepp_logan_symmetry():
    n = 64
    u = shepp_logan(n).data
    # x is axis 0; the table is mirror symmetric in x except for the two
    # side ellipses (different sizes) and the small ellipses near the bottom
    c = (np.arange(1, n + 1) - (n + 1) / 2) * 2 / n
    X, Y = np.meshgrid(c, c, indexing="ij")
    odd = np.zeros((n, n), bool)
    for k in (2, 3, 7, 9):
        e = SHEPP_LOGAN_ELLIPSES[k]
        odd |= e.indicator(X, Y) | e.indicator(-X, Y)
    diff = u != u[::-1, :]
    assert diff.any() and not np.any(diff & ~odd)
    sym = shepp_logan(PhantomSpec(n, ellipses=SHEPP_LOGAN_ELLIPSES[:2] + SHEPP_LOGAN_ELLIPSES[4:7]))
    np.testing.assert_array_equal(sym.data, sym.data[::-1, :])


def test_shepp_logan_pointwise_membership():
    n = 65
    u = shepp_logan(n).data
    c = n // 2  # pixel centred at the origin for odd n
    want = sum(e.value for e in SHEPP_LOGAN_ELLIPSES if e.indicator(0.0, 0.0))
    assert u[c, c] == pytest.approx(want)
    # an off-centre pixel
    i, j = 10, 40
    x, y = (i + 1 - (n + 1) / 2) * 2 / n, (j + 1 - (n + 1) / 2) * 2 / n
    want = sum(e.value for e in SHEPP_LOGAN_ELLIPSES if e.indicator(x, y))
    assert u[i, j] == pytest.approx(want)


def test_shepp_logan_zero_outside():
    n = 64
    u = shepp_logan(n).data
    c = (np.arange(1, n + 1) - (n + 1) / 2) * 2 / n
    X, Y = np.meshgrid(c, c, indexing="ij")
    outside = ~SHEPP_LOGAN_ELLIPSES[0].indicator(X, Y)
    assert np.all(u[outside] == 0)


def test_phantom_spec_validation():
    with pytest.raises(ValueError):
        PhantomSpec(8)
    with pytest.raises(ValueError):
        PhantomSpec(32, metal=MetalSpec(value=0.5))
    with pytest.raises(ValueError):
        MetalSpec(shape="triangle")


def test_ellipse_rotation():
    e = Ellipse(1.0, 0.5, 0.1, 0.0, 0.0, rotation=90.0)
    assert e.indicator(0.0, 0.4) and not e.indicator(0.4, 0.0)


def test_metal_insertion():
    n = 64
    m = MetalSpec()
    base = shepp_logan(n)
    out = insert_metal(base, m)
    region = metal_region(n, m)
    assert region.sum() == (n // 16) ** 2
    assert np.all(out.data[region] == 3.0)
    np.testing.assert_array_equal(out.data[~region], base.data[~region])
    i, j = np.argwhere(region).mean(0).round().astype(int)
    assert out.data[i, j] == 3.0
    np.testing.assert_array_equal(shepp_logan(PhantomSpec(n, metal=m)).data, out.data)


def test_metal_ellipse_and_bounds():
    n = 32
    r = metal_region(n, MetalSpec(shape="ellipse", center=(0.0, 0.0), axes=(0.2, 0.2)))
    assert r.any() and r.sum() < n * n
    with pytest.raises(ValueError):
        metal_region(n, MetalSpec(center=(1.0, 1.0), side=4))


def test_disk():
    d = disk(32, 0.5, value=2.0, h=0.5)
    assert d.geom.h == 0.5
    assert set(np.unique(d.data)) == {0.0, 2.0}
    assert d.data.sum() / 2.0 == pytest.approx(np.pi * 8**2, rel=0.1)


# capping


@pytest.fixture
def sino(rng):
    g = SinoGeom.uniform(12, 20, 1.0)
    return Sinogram(g, rng.uniform(0.1, 5.0, g.shape))


def test_cap_above_max(sino):
    out, mask = cap_sinogram(sino, 10.0)
    np.testing.assert_array_equal(out.data, sino.data)
    assert mask.count == 0


def test_cap_tiny(sino):
    out, mask = cap_sinogram(sino, 1e-12)
    assert mask.count == sino.data.size
    np.testing.assert_allclose(mask.thresholds, 0.8e-12)


def test_cap_counts_and_values(sino):
    cap = 3.0
    out, mask = cap_sinogram(sino, cap, c_fraction=0.7)
    over = sino.data > cap
    assert mask.count == over.sum()
    assert np.all(out.data[over] == cap) and np.all(out.data <= cap)
    np.testing.assert_array_equal(out.data[~mask.mask], sino.data[~mask.mask])
    np.testing.assert_allclose(mask.thresholds[over], 0.7 * cap)


def test_cap_validation(sino):
    for cap, frac in ((0.0, 0.8), (1.0, 0.0), (1.0, 1.5)):
        with pytest.raises(ValueError):
            cap_sinogram(sino, cap, frac)
    with pytest.raises(TypeError):
        cap_sinogram(sino.data, 1.0)


# noise


def test_noise_zero(sino):
    np.testing.assert_array_equal(add_noise(sino, 0.0).data, sino.data)


def test_noise_statistics(rng):
    g = SinoGeom.uniform(360, 400, 1.0)
    v = Sinogram(g, rng.uniform(0, 10, g.shape))
    out = add_noise(v, 0.05, seed=1)
    eps = out.data - v.data
    ref = 0.05 * np.std(v.data)
    assert np.std(eps) == pytest.approx(ref, rel=0.05)
    assert abs(eps.mean()) <= 3 * ref / np.sqrt(eps.size)
    assert out.data.shape == v.data.shape


def test_noise_seeded(sino):
    a, b = add_noise(sino, 0.1, seed=4), add_noise(sino, 0.1, seed=4)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, add_noise(sino, 0.1, seed=5).data)
    with pytest.raises(ValueError):
        add_noise(sino, -0.1)


# metal mask heuristic


@pytest.fixture(scope="module")
def metal_setup():
    n = 64
    op = RadonOp.create(n, 90, 96)
    m = MetalSpec()
    u = shepp_logan(PhantomSpec(n, metal=m)).data
    return op, m, u, op.forward(u)


def test_mask_empty_without_metal(metal_setup):
    op, *_ = metal_setup
    v = op.forward(shepp_logan(64).data)
    with pytest.warns(EmptyMaskWarning):
        mask = estimate_metal_mask(v, op, image_threshold=1.8)
    assert mask.count == 0


def test_mask_covers_metal_trace(metal_setup):
    op, m, _, v = metal_setup
    mask = estimate_metal_mask(v, op, image_threshold=1.8, dilation_px=5)
    trace = op.forward(metal_region(64, m).astype(float)) > 0
    assert mask.count > 0
    assert np.all(mask.mask[trace])
    np.testing.assert_allclose(mask.thresholds[mask.mask], 0.8 * v[mask.mask])


def test_mask_dilation_monotone(metal_setup):
    op, _, _, v = metal_setup
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyMaskWarning)
        m0 = estimate_metal_mask(v, op, 1.8, dilation_px=0).mask
        m5 = estimate_metal_mask(v, op, 1.8, dilation_px=5).mask
    assert np.all(m5[m0]) and m5.sum() > m0.sum()
    with pytest.raises(ValueError):
        estimate_metal_mask(v, op, 1.8, dilation_px=-1)


# metrics


def test_masked_rmse():
    g = ImageGeom(8)
    a = Image(g, np.arange(64.0).reshape(8, 8))
    assert masked_rmse(a, a) == 0.0
    assert masked_rmse(a.data + 0.3, a.data) == pytest.approx(0.3)
    b = a.data + np.linspace(-1, 1, 64).reshape(8, 8)
    full = np.sqrt(np.mean((a.data - b) ** 2))
    assert masked_rmse(a, b) == pytest.approx(full)
    assert masked_rmse(a, b, np.zeros((8, 8), bool)) == pytest.approx(full)
    ex = np.zeros((8, 8), bool)
    ex[0] = True
    assert masked_rmse(a, b, ex) == pytest.approx(np.sqrt(np.mean((a.data - b)[1:] ** 2)))
    with pytest.raises(ValueError):
        masked_rmse(a, b, np.ones((8, 8), bool))
    with pytest.raises(ValueError):
        masked_rmse(a, np.zeros((4, 4)))


def test_constraint_mask_type_returned(metal_setup):
    op, _, _, v = metal_setup
    assert isinstance(estimate_metal_mask(v, op, 1.8), ConstraintMask)
