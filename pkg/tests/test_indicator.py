import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sici

from emdsm.data import preprocess, preprocessed
from emdsm.forward import farfield_cube_closedform
from emdsm.indicator import (
    band_sum,
    combine_composite,
    combine_pair,
    dc_estimate,
    indicator_I,
    indicator_S_ip2,
    indicator_slab_known_t0,
    indicator_W,
    profile_along,
    two_sided_sum,
)

SI10 = sici(10.0)[0]
ORIGIN = np.zeros(3)


def zero_like(ds):
    return ds.with_values(np.zeros_like(ds.values))


def line(x_hat, s):
    return np.outer(np.asarray(s, dtype=float), x_hat)


def test_zero_dataset(cube_t1):
    ds = zero_like(cube_t1[1])
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, (50, 3))
    assert np.all(indicator_I(ds, 0, 0.7, pts) == 0)
    assert np.all(indicator_W(ds, (0, 1), 1.0, pts) == 0)
    assert np.all(indicator_S_ip2(ds, 0, 0.0, 1.0, pts) == 0)


def test_center_value_matches_sine_integral(cube_t1):
    ds = cube_t1[1]
    center = indicator_I(ds, 0, 1.0, ORIGIN)
    assert center == pytest.approx(4 * SI10, abs=0.05)
    far = indicator_I(ds, 0, 1.0, np.array([0, 0, 2.5]))
    assert abs(far) <= 0.1 * center


def test_slab_known_t0_is_indicator_I(cube_t1):
    ds = cube_t1[1]
    pts = np.random.default_rng(1).uniform(-1.5, 1.5, (40, 3))
    for k in range(ds.n_frames):
        assert np.array_equal(indicator_slab_known_t0(ds, k, 1.0, pts), indicator_I(ds, k, 1.0, pts))
    inside = indicator_slab_known_t0(ds, 0, 1.0, np.array([0.2, -0.1, 0.0]))
    assert inside == pytest.approx(4 * SI10, abs=0.05)


def test_slab_decay_beyond_dilation(cube_t1):
    ds = cube_t1[1]
    s = np.linspace(-1.5, 1.5, 301)
    vals = indicator_I(ds, 0, 1.0, line((0, 0, 1), s))
    outside = np.abs(s) >= 1.0
    assert np.max(np.abs(vals[outside])) <= 0.1 * vals.max()


def test_combine_pair_examples():
    assert combine_pair(2, 2, 0) == 1
    assert combine_pair(3, 0, 0) == 0
    assert combine_pair(3, 6, 0) == 2
    assert combine_pair(-1, 5, 0) == 0
    assert combine_pair(1.0, 5.0, 1.0) == 0
    with pytest.raises(ValueError):
        combine_pair(1, 1, -0.1)


def test_combine_composite_examples():
    assert combine_composite([2, 2]) == 1
    assert combine_composite([5, 5, 0]) == 0
    assert combine_composite([1]) == 1
    with pytest.raises(ValueError):
        combine_composite([])


pos = st.floats(1e-3, 1e3)


@given(pos, pos)
def test_pair_is_harmonic_half(a, b):
    w = combine_pair(a, b)
    assert w <= min(a, b) + 1e-12
    assert w == pytest.approx(combine_composite([a, b]))


def test_W_center_is_half_of_I(cube_t1):
    ds = cube_t1[1]
    w = indicator_W(ds, (0, 1), 1.0, ORIGIN)
    assert w == pytest.approx(0.5 * indicator_I(ds, 0, 1.0, ORIGIN), rel=1e-9)
    assert w == pytest.approx(2 * SI10, abs=0.05)


def test_W_vanishes_for_disjoint_slabs(cube_t1):
    ds = cube_t1[1]
    g = np.linspace(-1.5, 1.5, 31)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1)
    for eta in (0.3, 1.8, 2.5):
        assert np.all(indicator_W(ds, (0, 1), eta, pts) == 0)


def test_W_rejects_non_opposite(cube_t1):
    with pytest.raises(ValueError):
        indicator_W(cube_t1[1], (0, 2), 1.0, ORIGIN)


def test_S_ip2(cube_window):
    ds = cube_window[1]
    s = np.linspace(-1.5, 1.5, 301)
    vals = indicator_S_ip2(ds, 0, 0.0, 1.0, line((0, 0, 1), s))
    center = indicator_S_ip2(ds, 0, 0.0, 1.0, ORIGIN)
    mirror = indicator_S_ip2(ds, 1, 0.0, 1.0, ORIGIN)
    assert center > 0
    assert abs(center - mirror) <= 0.2 * mirror
    assert np.all(vals[np.abs(s) <= 0.4] > 0)
    assert np.max(vals[np.abs(s) >= 1.0]) <= 0.1 * vals.max()
    # the pair form uses the first member
    assert indicator_S_ip2(ds, (0, 1), 0.0, 1.0, ORIGIN) == center
    with pytest.raises(ValueError):
        indicator_S_ip2(ds, 0, 1.0, 1.0, ORIGIN)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, beta):
    from conftest import AXES, make_dataset
    from emdsm.forward import Impulse
    from emdsm.geometry import SupportShape
    u = _LIN["u"]
    v = _LIN["v"]
    mixed = u.with_values(alpha * u.values + beta * v.values)
    pts = np.random.default_rng(3).uniform(-1, 1, (20, 3))
    lhs = indicator_I(mixed, 0, 1.2, pts)
    rhs = alpha * indicator_I(u, 0, 1.2, pts) + beta * indicator_I(v, 0, 1.2, pts)
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


def _lin_data():
    from conftest import AXES, make_dataset
    from emdsm.forward import Impulse
    from emdsm.geometry import SupportShape
    _, u = make_dataset(SupportShape.cube(0.4), Impulse(1.0), AXES[:2])
    _, v = make_dataset(SupportShape.ball(0.3, (0, 0, 0.2)), Impulse(1.5), AXES[:2])
    return {"u": u, "v": v}


_LIN = _lin_data()


@settings(max_examples=30, deadline=None)
@given(st.tuples(*[st.floats(-1, 1)] * 3), st.floats(-1, 1), st.floats(-1, 1))
def test_one_dimensional_reduction(y, a, b):
    ds = _LIN["u"]
    x = ds.frames[0].x_hat
    p = ds.frames[0].p_hat
    q = np.cross(x, p)
    y = np.asarray(y)
    y2 = y + a * p + b * q
    # move y2 back onto the plane through y exactly
    both = indicator_I(ds, 0, 0.8, np.stack([y, y2 - (y2 @ x - y @ x) * x]))
    assert both[0] == both[1] or abs(both[0] - both[1]) <= 1e-12 * abs(both[0])


def test_planarity_exact_on_grid(cube_t1):
    ds = cube_t1[1]
    g = np.linspace(-1.5, 1.5, 16)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1)
    vals = indicator_I(ds, 0, 1.0, pts)
    assert np.all(vals == vals[:1, :1, :])


def test_oracle_equivalence_closed_form(cube_t1):
    src, ds = cube_t1
    frame = ds.frames[0]
    grid = ds.grid
    omega = grid.values
    e = farfield_cube_closedform(np.full(3, 0.5), np.zeros(3), src.current, 1.0, 1.0, 1.0,
                                 frame.x_hat, omega)
    data = preprocess(e, frame, omega, 1.0)
    s = np.linspace(-2.5, 0.5, 61)
    ref = np.empty_like(s)
    dw = grid.step
    e0 = (4 * data[0].real - data[1].real) / 3
    for k, sk in enumerate(s):
        total = 0.0
        for n in range(omega.size):
            wgt = dw / 2 if n == omega.size - 1 else dw
            total += 2 * (data[n] * np.exp(1j * omega[n] * sk)).real * wgt
        ref[k] = total + dw * e0
    got = profile_along(ds, 0, s)
    assert np.max(np.abs(got - ref)) <= 1e-10 * np.abs(ref).max()


def test_slab_contrast(cube_t1):
    ds = cube_t1[1]
    s = np.linspace(-3, 3, 1201)
    vals = indicator_I(ds, 0, 1.0, line((0, 0, 1), s))
    central = vals[np.abs(s) <= 0.25]
    outside = vals[np.abs(s) >= 1.5]
    assert central.min() >= 10 * np.abs(outside).max()


@given(st.floats(0.01, 100.0))
@settings(max_examples=15, deadline=None)
def test_positive_scaling(k):
    ds = _LIN["u"]
    pts = np.random.default_rng(5).uniform(-1, 1, (30, 3))
    a = indicator_I(ds, 0, 1.0, pts)
    b = indicator_I(ds.scaled(k), 0, 1.0, pts)
    assert np.allclose(b, k * a, rtol=1e-12, atol=1e-12 * np.abs(a).max() * k)


def test_hermitian_fold(cube_t1):
    ds = cube_t1[1]
    data = preprocessed(ds, 0)
    u = np.linspace(-4, 4, 401)
    a = band_sum(data, ds.grid, u)
    b = two_sided_sum(data, ds.grid, u)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_dc_estimate_richardson():
    w = np.array([0.1, 0.2])
    vals = 2.0 - 3.0 * w**2 + 0j
    assert dc_estimate(vals) == pytest.approx(2.0, abs=1e-14)


def test_dc_term_removes_bias(cube_t1):
    ds = cube_t1[1]
    data = preprocessed(ds, 0)
    with_dc = band_sum(data, ds.grid, -1.0)
    without = band_sum(data, ds.grid, -1.0, include_dc=False)
    assert with_dc - without == pytest.approx(ds.grid.step * 1.0, rel=1e-3)
    assert abs(with_dc - 4 * SI10) < abs(without - 4 * SI10)
