import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imcf_lab.errors import AxisSingular, WrongBranch, ZeroMeanCurvature
from imcf_lab.geometry import (
    ExpanderParams, GeometricSample, ProfileState, RotationField, curve_arrays, geometric_sample,
    ode_rhs, evolution_identity_residual, soliton_arrays, soliton_residual, support, tangential_support,
)
from imcf_lab.profiles import catenoid, ellipse, torus

angles = st.floats(-3.0, 3.0)
coords = st.floats(0.05, 50.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ExpanderParams(1, 1.0)
    with pytest.raises(ValueError):
        ExpanderParams(2, 0.0)
    assert ExpanderParams.cylinder(3).C == 0.5
    assert ExpanderParams.sphere(4).C == 0.25


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cylinder_is_fixed_point(n):
    rhs = ode_rhs(ProfileState(0.0, 1.3, -0.7, math.pi / 2), ExpanderParams.cylinder(n))
    assert rhs == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_curvature_matches_circle(n):
    a = 0.9
    st_ = ProfileState(a, math.sin(a), -math.cos(a), a)
    _, _, dth = ode_rhs(st_, ExpanderParams.sphere(n))
    assert dth == pytest.approx(1.0, abs=1e-14)


def test_ode_rhs_errors():
    p = ExpanderParams()
    with pytest.raises(AxisSingular):
        ode_rhs(ProfileState(0, 0.0, -1, 0), p)
    with pytest.raises(WrongBranch):
        ode_rhs(ProfileState(0, 1.0, 1.0, 0.0), p)


def test_geometric_sample_cylinder():
    g = geometric_sample(ProfileState(0, 2.0, 0.5, math.pi / 2), ExpanderParams.cylinder(2))
    assert g.kappa1 == pytest.approx(0.0, abs=1e-15)
    assert g.H == pytest.approx(0.5)
    assert g.psi == pytest.approx(-2.0)
    assert g.g == pytest.approx(0.5)
    assert soliton_residual(g, ExpanderParams.cylinder(2)) == pytest.approx(0.0, abs=1e-15)


def test_soliton_residual_zero_H():
    with pytest.raises(ZeroMeanCurvature):
        soliton_residual(GeometricSample(0, 0, 0.0, 0, -1, 0), ExpanderParams())


@given(r=coords, z=st.floats(-50, 50), th=angles)
def test_support_pythagoras(r, z, th):
    psi, g = support(r, z, th), tangential_support(r, z, th)
    assert psi**2 + g**2 == pytest.approx(r**2 + z**2, rel=1e-12, abs=1e-12)


@given(r=coords, z=st.floats(-50, 50), th=angles, lam=st.floats(0.1, 10.0))
def test_sample_scaling(r, z, th, lam):
    p = ExpanderParams(2, 1.0)
    if support(r, z, th) >= -1e-3:
        return
    a = geometric_sample(ProfileState(0, r, z, th), p)
    b = geometric_sample(ProfileState(0, lam * r, lam * z, th), p)
    assert b.H == pytest.approx(a.H / lam, rel=1e-9)
    assert b.psi == pytest.approx(lam * a.psi, rel=1e-9)


def test_rotation_fields():
    X = np.array([[1.0, 2.0, 3.0]])
    assert RotationField.SYMMETRY_AXIS.vector(X).tolist() == [[-2.0, 1.0, 0.0]]
    assert RotationField.ORTHOGONAL_AXIS.vector(X).tolist() == [[3.0, 0.0, -1.0]]


def test_soliton_arrays_derivatives_by_finite_differences(hi):
    # analytic psi', g', H', psi'', g'' against centred differences of the dense output
    q = hi.geometry
    s = np.linspace(1.0, 5.0, 9)
    h = 1e-3
    Y = [hi.at(s + k * h) for k in (-1, 0, 1)]
    arr = [soliton_arrays(y[:, 0], y[:, 1], y[:, 2], hi.params) for y in Y]
    mid = arr[1]
    for name, d in (("psi", "dpsi"), ("g", "dg"), ("H", "dH")):
        fd = (arr[2][name] - arr[0][name]) / (2 * h)
        assert np.max(np.abs(fd - mid[d])) < 1e-5
    for name, d in (("psi", "d2psi"), ("g", "d2g")):
        fd = (arr[2][name] - 2 * mid[name] + arr[0][name]) / h**2
        assert np.max(np.abs(fd - mid[d])) < 1e-4
    assert set(q) >= {"psi", "g", "H", "A2", "dpsi", "d2psi", "dg", "d2g"}


def test_curve_arrays_on_circle():
    t = np.linspace(0.3, 2.8, 400)
    h = t[1] - t[0]
    q = curve_arrays(np.sin(t), -np.cos(t), h, 2)
    sel = slice(8, -8)
    assert np.max(np.abs(q["kappa1"][sel] - 1.0)) < 1e-8
    assert np.max(np.abs(q["H"][sel] - 2.0)) < 1e-8
    assert np.max(np.abs(q["psi"][4:-4] + 1.0)) < 1e-10


def test_curve_arrays_validation():
    with pytest.raises(ValueError):
        curve_arrays(np.ones(20), np.arange(20.0), 1.0, 2, accuracy=3)


@pytest.mark.parametrize("make", [catenoid, ellipse, torus])
def test_evolution_identity_fourth_order(make):
    errs = [evolution_identity_residual(*make(h), ExpanderParams(2, 1.0)).sup for h in (0.05, 0.025)]
    assert errs[0] / errs[1] > 2**3.5


def test_evolution_identity_second_order_stencil():
    errs = [evolution_identity_residual(*ellipse(h), ExpanderParams(3, 0.5), accuracy=2).sup for h in (0.02, 0.01)]
    assert 3.5 < errs[0] / errs[1] < 4.5
