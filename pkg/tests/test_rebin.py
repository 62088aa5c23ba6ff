import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvct.grid import SinoGeom
from tvct.radon import RadonOp
from tvct.rebin import (
    FanGeom,
    analytic_disk_fan,
    fan_to_para_coords,
    para_to_fan_coords,
    rebin_fan2para,
    uncovered_constraint,
)
from tvct.sim import disk


def test_coordinate_examples():
    assert fan_to_para_coords(0.0, 0.0, 5.0) == pytest.approx((0.0, math.pi / 2))
    assert fan_to_para_coords(2.5, 0.0, 5.0) == pytest.approx((math.pi / 6, math.pi / 3))


def test_beyond_reach():
    for s in (5.0, -5.0, 7.0):
        with pytest.raises(ValueError, match="offset beyond fan reach"):
            fan_to_para_coords(s, 0.0, 5.0)


@given(frac=st.floats(-0.999, 0.999), theta=st.floats(-7, 7), d=st.floats(0.1, 100))
def test_round_trip(frac, theta, d):
    s = frac * d
    a, p = fan_to_para_coords(s, theta, d)
    s2, t2 = para_to_fan_coords(a, p, d)
    assert s2 == pytest.approx(s, abs=1e-12 * max(d, 1))
    assert t2 == pytest.approx(theta, abs=1e-12 * max(abs(theta), 1))


def test_fan_geom_validation():
    with pytest.raises(ValueError):
        FanGeom(0.0, [0.0, 0.1], [0.0, 1.0])
    with pytest.raises(ValueError):
        FanGeom(1.0, [0.1, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        FanGeom(1.0, [0.0, 1.6], [0.0, 1.0])
    with pytest.raises(ValueError):
        FanGeom(1.0, [0.0, 0.1], [0.0, 7.0])
    with pytest.raises(ValueError):
        FanGeom(1.0, [0.0], [0.0, 1.0])
    f = FanGeom.uniform(10.0, 8, 0.4, 30)
    assert f.shape == (30, 8)
    assert f.reach == pytest.approx(10 * math.sin(0.2 - 0.025))


@pytest.fixture
def setup():
    fan = FanGeom.uniform(d=40.0, n_det=64, fan_angle=1.2, n_views=120)
    target = SinoGeom.uniform(30, 40, 1.0)
    return fan, target


def test_constant_data(setup):
    fan, target = setup
    sino, cov = rebin_fan2para(np.full(fan.shape, 2.5), fan, target)
    assert cov.any()
    np.testing.assert_allclose(sino.data[cov], 2.5, rtol=1e-14)
    assert np.all(sino.data[~cov] == 0)


def test_node_value_direct():
    fan = FanGeom.uniform(d=10.0, n_det=16, fan_angle=1.0, n_views=24)
    data = np.random.default_rng(0).normal(size=fan.shape)
    for k, j in ((3, 4), (10, 11), (0, 7)):
        s, theta = para_to_fan_coords(fan.alphas[j], fan.phis[k], fan.d)
        # a target with one angle and two bins at offsets -s and +s
        g = SinoGeom(np.array([theta]), 2, 2 * abs(s))
        sino, cov = rebin_fan2para(data, fan, g)
        col = 1 if s > 0 else 0
        assert cov[0, col]
        assert sino.data[0, col] == pytest.approx(data[k, j], abs=1e-12)


def test_periodic_seam():
    fan = FanGeom.uniform(d=10.0, n_det=16, fan_angle=1.0, n_views=24)
    base = np.random.default_rng(1).normal(size=fan.shape)
    # query half-way between the last view and the first view of the next turn
    phi = fan.phis[-1] + 0.5 * (2 * math.pi - fan.phis[-1])
    j = 8
    s, theta = para_to_fan_coords(fan.alphas[j], phi, fan.d)
    g = SinoGeom(np.array([theta]), 2, 2 * abs(s))
    sino, cov = rebin_fan2para(base, fan, g)
    col = 1 if s > 0 else 0
    assert sino.data[0, col] == pytest.approx(0.5 * (base[-1, j] + base[0, j]), abs=1e-12)


def test_linear_and_monotone(setup, rng):
    fan, target = setup
    a, b = rng.normal(size=(2,) + fan.shape)
    ra = rebin_fan2para(a, fan, target)[0].data
    rb = rebin_fan2para(b, fan, target)[0].data
    rab = rebin_fan2para(2 * a - 3 * b, fan, target)[0].data
    np.testing.assert_allclose(rab, 2 * ra - 3 * rb, atol=1e-12)
    lo = rebin_fan2para(np.abs(a), fan, target)[0].data
    hi = rebin_fan2para(np.abs(a) + np.abs(b), fan, target)[0].data
    assert np.all(hi >= lo - 1e-15) and np.all(lo >= 0)


def test_coverage_and_errors(setup):
    fan, target = setup
    _, cov = rebin_fan2para(np.ones(fan.shape), fan, target)
    s = np.abs(target.offsets)
    assert np.all(cov[:, s < 0.9 * fan.reach]) and not np.any(cov[:, s > fan.reach])
    with pytest.raises(ValueError):
        rebin_fan2para(np.ones((3, 3)), fan, target)
    far = SinoGeom.uniform(10, 4, 100.0)
    with pytest.raises(ValueError):
        rebin_fan2para(np.ones(fan.shape), fan, far)
    cm = uncovered_constraint(cov, target, lower=0.0)
    assert cm.count == (~cov).sum()


def test_disk_rebin_matches_projection():
    n = 64
    op = RadonOp.create(n, 90, 2 * n)
    fan = FanGeom.uniform(d=2 * n, n_det=256, fan_angle=2 * math.asin(0.5) + 0.2, n_views=360)
    r = 0.8 * n / 2
    sino, cov = rebin_fan2para(analytic_disk_fan(fan, r), fan, op.sino_geom)
    para = op.forward(disk(n, 0.8).data)
    err = np.sqrt(np.mean((sino.data - para)[cov] ** 2)) / np.sqrt(np.mean(para[cov] ** 2))
    assert err <= 0.03


def test_analytic_disk_off_centre():
    fan = FanGeom.uniform(d=50.0, n_det=9, fan_angle=0.8, n_views=4)
    out = analytic_disk_fan(fan, 5.0, value=2.0, center=(1.0, -2.0))
    s, theta = para_to_fan_coords(fan.alphas[None, :], fan.phis[:, None], fan.d)
    s = s - (np.cos(theta) - 2 * np.sin(theta))
    np.testing.assert_allclose(out, 4.0 * np.sqrt(np.maximum(25 - s**2, 0)))
