import math

import numpy as np
import pytest

from conftest import exact_cylinder, exact_sphere
from imcf_lab import linearized as lin
from imcf_lab.errors import NotASoliton, WrongBranch
from imcf_lab.geometry import ExpanderParams, RotationField
from imcf_lab.shooting import TerminationCause, Trajectory
from imcf_lab.verify import hi_trajectory


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cylinder_residuals_vanish(n):
    t = exact_cylinder(n, rho=1.7)
    assert lin.kernel_residual_mode0(t).sup <= 1e-14
    assert lin.kernel_residual_mode1(t).sup <= 1e-14
    assert lin.quotient_residual(t).sup <= 1e-14


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_residuals_vanish(n):
    t = exact_sphere(n)
    assert lin.kernel_residual_mode0(t).sup <= 1e-10
    assert lin.kernel_residual_mode1(t).sup <= 1e-10
    assert lin.quotient_residual(t).sup <= 1e-10


def test_mode_coefficients_on_cylinder():
    n, rho = 3, 2.0
    t = exact_cylinder(n, rho)
    co = lin.mode_coefficients(t.geometry, t.params)
    q = t.geometry
    assert np.allclose(co.c2, 1.0)
    assert np.allclose(co.c0_mode0, 0.0, atol=1e-15)
    # first spherical harmonics have eigenvalue -(n-1)
    assert np.allclose(co.c0_mode1, -(n - 1) / rho**2)
    assert np.allclose(co.c1, t.params.C * q["H"] ** 2 * q["g"])


def test_hi_residuals(hi):
    assert lin.kernel_residual_mode0(hi).sup <= 1e-8
    assert lin.kernel_residual_mode1(hi).sup <= 1e-8
    assert lin.quotient_residual(hi).sup <= 1e-7


def test_symmetry_axis_kernel_vanishes(hi):
    for t in (hi, exact_cylinder(), exact_sphere()):
        assert lin.symmetry_axis_rotation_kernel(t) <= 1e-14


def test_orthogonal_rotation_is_mode_one(hi_short):
    # <R, nu> for the (x1, z)-rotation equals -g cos(phi)
    k = np.arange(5, len(hi_short), 37)
    r, z, th = hi_short.r[k], hi_short.z[k], hi_short.theta[k]
    g = hi_short.geometry["g"][k]
    for phi in (0.0, 0.7, 2.0):
        X = np.stack([r * math.cos(phi), r * math.sin(phi), z], axis=-1)
        nu = np.stack([-np.sin(th) * math.cos(phi), -np.sin(th) * math.sin(phi), np.cos(th)], axis=-1)
        val = np.sum(RotationField.ORTHOGONAL_AXIS.vector(X) * nu, axis=-1)
        assert np.allclose(val, -g * math.cos(phi), atol=1e-12)


def test_fd_oracle_converges_at_second_order(hi):
    rep = lin.fd_refinement(hi, stride=10)
    for key in ("kernel_mode0", "kernel_mode1", "quotient", "dpsi_error", "dg_error"):
        assert rep[key].order >= 1.8, key
        assert len(rep[key].levels) == 3


def test_fd_quotient_bounded_by_kernels(hi):
    fd = lin.fd_kernel_residuals(hi, 1e-2, stride=10)
    psi_min = np.min(np.abs(hi.geometry["psi"]))
    bound = 10 * (fd["kernel_mode0"].sup + fd["kernel_mode1"].sup) / psi_min
    assert fd["quotient"].sup <= bound


def test_relaxed_tolerance_keeps_residuals_small():
    # derivatives are analytic on the ODE, so the residuals do not track rk_tol
    t = hi_trajectory(rk_tol=1e-8)
    assert lin.kernel_residual_mode0(t, tol=1e-8).sup <= 1e-8
    assert lin.kernel_residual_mode1(t, tol=1e-8).sup <= 1e-8


def test_quotient_algebra():
    # with consistent derivatives the quotient residual equals (-res1 - q res0) / psi
    rng = np.random.default_rng(0)
    psi, dpsi, d2psi = -1 - rng.random(5), rng.normal(size=5), rng.normal(size=5)
    g, dg, d2g = rng.normal(size=5), rng.normal(size=5), rng.normal(size=5)
    r, cos, H, A2 = 1 + rng.random(5), rng.normal(size=5), 1 + rng.random(5), rng.random(5)
    n, C = 2, 1.0
    c1 = (n - 1) * cos / r + C * H**2 * g
    c0 = A2 - C * H**2
    res0 = d2psi + c1 * dpsi + c0 * psi
    res1 = d2g + c1 * dg + (c0 - (n - 1) / r**2) * g
    q, dq, d2q = lin.quotient_terms(psi, dpsi, d2psi, g, dg, d2g)
    resq = d2q + (n - 1) * cos / r * dq - (n - 1) * q / r**2 + C * H**2 * g * dq + 2 * dpsi / psi * dq
    assert np.allclose(resq, (-res1 - q * res0) / psi, rtol=1e-10, atol=1e-12)


def test_wrong_branch_guard():
    t = exact_cylinder()
    flipped = Trajectory(s=t.s, r=t.r, z=t.z, theta=-t.theta, termination=TerminationCause.REACHED_S_MAX, params=t.params)
    with pytest.raises(WrongBranch):
        lin.kernel_residual_mode0(flipped)
    with pytest.raises(WrongBranch):
        lin.quotient_residual(flipped)


def test_not_a_soliton_guard():
    t = exact_cylinder()
    wrong = Trajectory(s=t.s, r=t.r, z=t.z, theta=t.theta, termination=t.termination, params=ExpanderParams(2, 0.5))
    with pytest.raises(NotASoliton):
        lin.kernel_residual_mode1(wrong)
