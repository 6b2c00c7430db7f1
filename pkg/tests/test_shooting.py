import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imcf_lab.errors import AxisSingular, EmptyGrid, InvalidCap, WrongBranch
from imcf_lab.geometry import ExpanderParams, ProfileState, _rhs
from imcf_lab.shooting import (
    IntegratorConfig, TerminationCause, cap_series, detect_self_intersection, integrate,
    shoot_axis, sweep_bottle,
)


def _rk4(y, h, steps, n, C):
    def f(v):
        return np.array(_rhs(v[0], v[1], v[2], n, C))

    y = np.array(y, dtype=float)
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cylinder_fixed_point(n):
    p = ExpanderParams.cylinder(n)
    t = integrate(ProfileState(0.0, 1.0, 0.0, math.pi / 2), p)
    assert t.termination is TerminationCause.REACHED_S_MAX
    assert np.max(np.abs(t.r - 1.0)) <= 1e-9
    assert np.max(np.abs(t.theta - math.pi / 2)) <= 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_closes_as_cap(n):
    t = shoot_axis(-1.0, ExpanderParams.sphere(n))
    assert t.termination is TerminationCause.AXIS_CAP
    assert np.max(np.abs(np.hypot(t.r, t.z) - 1.0)) <= 1e-8
    assert np.max(np.abs(np.arctan2(t.r, -t.z) - t.theta)) <= 1e-4
    assert t.s[-1] == pytest.approx(math.pi, abs=0.05)


def test_sphere_from_offset_start():
    eps = 1e-6
    p = ExpanderParams.sphere(2)
    t = integrate(ProfileState(eps, math.sin(eps), -math.cos(eps), eps), p)
    assert t.termination is TerminationCause.AXIS_CAP


def test_hi_against_fixed_step_rk4(hi):
    # independent fixed-step oracle from the same post-startup state
    h, steps = 1e-5, 100_000
    y0 = (hi.r[0], hi.z[0], hi.theta[0])
    y = _rk4(y0, h, steps, 2, 1.0)
    ours = hi.at(np.array([hi.s[0] + h * steps]))[0]
    assert np.max(np.abs(ours - y)) < 1e-7


def test_hi_reaches_s_max_with_bounded_r(hi):
    assert hi.termination is TerminationCause.REACHED_S_MAX
    assert hi.s[-1] == pytest.approx(200.0 + 1e-6)
    assert np.max(hi.r) < 10.0


def test_n3_axis_shot_reaches_s_max():
    t = shoot_axis(-1.0, ExpanderParams(3, 0.5), IntegratorConfig(s_max=60.0))
    assert t.termination is TerminationCause.REACHED_S_MAX
    assert np.all(t.geometry["psi"] < 0)


def test_soliton_consistency_on_every_step(hi):
    assert np.max(np.abs(hi.soliton_residuals())) <= 10 * 1e-10


def test_startup_series_order():
    # dtheta/ds at the series point differs from the series slope by O(eps^2)
    p = ExpanderParams(2, 1.0)
    k = 1.0 / p.n
    errs = []
    for eps in (1e-2, 1e-3):
        s = cap_series(eps, -1.0, p)
        _, _, dth = _rhs(s.r, s.z, s.theta, p.n, p.C)
        errs.append(abs(dth - k))
    assert 50 < errs[0] / errs[1] < 200


def test_invalid_inputs():
    p = ExpanderParams()
    with pytest.raises(InvalidCap):
        shoot_axis(0.5, p)
    with pytest.raises(AxisSingular):
        integrate(ProfileState(0, 0.0, -1.0, 0.0), p)
    with pytest.raises(WrongBranch):
        integrate(ProfileState(0, 1.0, 1.0, 0.0), p)
    with pytest.raises(ValueError):
        IntegratorConfig(rk_tol=-1.0)


def test_support_vanishing_event():
    t = integrate(ProfileState(0, 1.0, 0.0, 2.9), ExpanderParams(2, 1.0), IntegratorConfig(s_max=30.0))
    assert t.termination is TerminationCause.SUPPORT_VANISHING
    psi = t.z[-1] * math.cos(t.theta[-1]) - t.r[-1] * math.sin(t.theta[-1])
    assert -2e-6 < psi < 0


def test_scale_invariance(hi_short):
    p = ExpanderParams(2, 1.0)
    t2 = shoot_axis(-2.0, p, IntegratorConfig(s_max=80.0))
    s = np.linspace(1.0, 30.0, 50)
    a = hi_short.at(s)
    b = t2.at(2 * s)
    assert np.max(np.abs(b[:, :2] - 2 * a[:, :2])) < 1e-7
    assert np.max(np.abs(b[:, 2] - a[:, 2])) < 1e-7


def test_scaled_trajectory(hi_short):
    lam = 1.7
    t = hi_short.scaled(lam)
    s = np.array([2.0, 5.0, 9.0])
    assert np.allclose(t.at(lam * s)[:, :2], lam * hi_short.at(s)[:, :2], atol=1e-12)
    assert np.allclose(t.at(lam * s)[:, 2], hi_short.at(s)[:, 2], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(beta=st.floats(-1.2, 1.2), dtheta=st.floats(0.1, math.pi - 0.1), d=st.sampled_from([1, -1]))
def test_polar_angle_monotone(beta, dtheta, d):
    # alpha' = -psi / |F|^2 > 0 on the physical branch
    t = integrate(
        ProfileState(0, math.cos(beta), math.sin(beta), beta + dtheta),
        ExpanderParams(2, 1.0), IntegratorConfig(s_max=5.0), direction=d,
    )
    alpha = np.arctan2(t.z, t.r)
    # alpha' decays like 1/|F|^2 along a cylindrical end
    assert np.all(d * np.diff(alpha) > -1e-14)
    assert d * (alpha[-1] - alpha[0]) > 0


def test_self_intersection_on_prolate_cycloid():
    t = np.linspace(-2.5, 2.5, 801)
    r = 3.0 - 1.5 * np.cos(t)
    z = t - 1.5 * np.sin(t)
    hits = detect_self_intersection(t, r, z)
    assert len(hits) == 1
    a = hits[0]
    assert abs(abs(a.s_i) - 1.4955) < 1e-3 and a.s_i == pytest.approx(-a.s_j, abs=1e-9)
    assert a.z == pytest.approx(0.0, abs=1e-9)


def test_embedded_curve_has_no_crossings(hi_short):
    assert detect_self_intersection(hi_short) == []


def test_sweep_vertical_start_gives_cylinders():
    res = sweep_bottle([-0.2, 0.0, 0.2], [math.pi / 2], ExpanderParams(2, 1.0), IntegratorConfig(s_max=20.0))
    for pt in res.points:
        assert pt.two_cylindrical
        rm, rp = pt.radii
        assert rm == pytest.approx(rp, rel=1e-6)
        assert rm == pytest.approx(math.cos(pt.beta), rel=1e-6)
    assert res.bottles == []


def test_sweep_distinct_radii_and_ordering():
    p, cfg = ExpanderParams(2, 1.0), IntegratorConfig(s_max=30.0)
    res = sweep_bottle([0.0, 0.1], [1.18, 2.0], p, cfg)
    assert [pt.index for pt in res.points] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert any(pt.distinct_radii() for pt in res.candidates)
    par = sweep_bottle([0.0, 0.1], [1.18, 2.0], p, cfg, workers=2)
    assert [pt.radii for pt in par.points] == [pt.radii for pt in res.points]


def test_sweep_marks_wrong_branch():
    res = sweep_bottle([0.0], [-0.5], ExpanderParams(2, 1.0), IntegratorConfig(s_max=10.0))
    assert res.points[0].skipped == "WrongBranch"


def test_sweep_empty_grid():
    with pytest.raises(EmptyGrid):
        sweep_bottle([], [1.0], ExpanderParams())
