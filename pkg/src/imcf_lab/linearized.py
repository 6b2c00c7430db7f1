"""Kernel identities of the linearised expander operator, reduced to the profile.

For a function phi(s) Y(w) on a hypersurface of revolution, with Y a
spherical harmonic on S^{n-1} of eigenvalue -lambda,

    L phi = Delta phi + C H^2 <F, grad phi> + (|A|^2 - C H^2) phi
          = [phi'' + (n-1)(r'/r) phi' - lambda phi / r^2
             + C H^2 g phi' + (|A|^2 - C H^2) phi] Y,

because <F, grad(phi Y)> = g phi' Y (the position has no component along the
sphere factor).  Mode 0 (lambda = 0) carries the support function psi; mode 1
(Y = w_1, lambda = n - 1) carries the rotation function of the rotation in
the (x1, z)-plane, <R, nu> = -g w_1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rk
from .errors import NotASoliton, WrongBranch
from .geometry import ExpanderParams, RotationField, _rhs
from .reports import ResidualReport, refinement_report
from .shooting import Trajectory


@dataclass(frozen=True)
class ModeReducedCoefficients:
    """phi'' + c1 phi' + c0 phi for modes 0 and 1 at each sample."""

    c2: np.ndarray
    c1: np.ndarray
    c0_mode0: np.ndarray
    c0_mode1: np.ndarray


def mode_coefficients(q: dict, params: ExpanderParams) -> ModeReducedCoefficients:
    n, C = params.n, params.C
    CH2 = C * q["H"] ** 2
    c1 = (n - 1) * q["cos"] / q["r"] + CH2 * q["g"]
    c0 = q["A2"] - CH2
    return ModeReducedCoefficients(
        c2=np.ones_like(c1), c1=c1, c0_mode0=c0, c0_mode1=c0 - (n - 1) / q["r"] ** 2,
    )


def ode_mismatch(traj: Trajectory, intervals: int = 16) -> float:
    """Largest gap between a sample and a tight re-integration from its predecessor.

    H is defined through -1/(C psi), so -1/H - C psi vanishes identically on
    samples; whether the samples solve the ODE for ``traj.params`` is the
    real soliton test.  Consecutive samples are single accepted steps, so the
    gap is at most the step's local error.
    """
    m = len(traj)
    if m < 2:
        return 0.0
    n, C = traj.params.n, traj.params.C

    def f(y):
        return _rhs(y[0], y[1], y[2], n, C)

    worst = 0.0
    for k in np.unique(np.linspace(0, m - 2, min(intervals, m - 1)).astype(int)):
        h = traj.s[k + 1] - traj.s[k]
        if h == 0:
            continue
        y0 = (traj.r[k], traj.z[k], traj.theta[k])
        res = rk.dopri(f, traj.s[k], y0, traj.s[k + 1], tol=1e-13, h0=abs(h) / 4, h_min=1e-16, h_max=abs(h))
        end = np.array([traj.r[k + 1], traj.z[k + 1], traj.theta[k + 1]])
        worst = max(worst, float(np.max(np.abs(res.y[-1] - end))))
    return worst


def _checked_geometry(traj: Trajectory, tol: float) -> dict:
    q = traj.geometry
    if np.any(q["psi"] >= 0):
        raise WrongBranch("support function psi >= 0 on trajectory")
    gap = ode_mismatch(traj)
    if not gap <= 100 * tol:
        raise NotASoliton(f"samples miss the expander ODE by {gap:.3e} (limit {100 * tol:.1e})")
    return q


def kernel_residual_mode0(traj: Trajectory, tol: float = 1e-10) -> ResidualReport:
    """L<F,nu> along the profile with analytic derivatives of psi."""
    q = _checked_geometry(traj, tol)
    co = mode_coefficients(q, traj.params)
    res = q["d2psi"] + co.c1 * q["dpsi"] + co.c0_mode0 * q["psi"]
    return ResidualReport.from_series("kernel_mode0", res)


def kernel_residual_mode1(traj: Trajectory, tol: float = 1e-10) -> ResidualReport:
    """L<R,nu> for the (x1, z)-rotation, amplitude g = <F, T>."""
    q = _checked_geometry(traj, tol)
    co = mode_coefficients(q, traj.params)
    res = q["d2g"] + co.c1 * q["dg"] + co.c0_mode1 * q["g"]
    return ResidualReport.from_series("kernel_mode1", res)


def quotient_terms(psi, dpsi, d2psi, g, dg, d2g):
    """q = -g/psi and its first two arclength derivatives."""
    q = -g / psi
    dq = -(dg * psi - g * dpsi) / psi**2
    d2q = -((d2g * psi - g * d2psi) / psi**2 - 2 * dpsi * (dg * psi - g * dpsi) / psi**3)
    return q, dq, d2q


def quotient_residual(traj: Trajectory, tol: float = 1e-10) -> ResidualReport:
    """Drift equation for h = <R,nu>/<F,nu> in mode 1:

    q'' + (n-1)(r'/r) q' - (n-1) q / r^2 + C H^2 g q' + (2 psi'/psi) q' = 0.
    """
    q = _checked_geometry(traj, tol)
    n, C = traj.params.n, traj.params.C
    h, dh, d2h = quotient_terms(q["psi"], q["dpsi"], q["d2psi"], q["g"], q["dg"], q["d2g"])
    res = (
        d2h
        + (n - 1) * q["cos"] / q["r"] * dh
        - (n - 1) * h / q["r"] ** 2
        + C * q["H"] ** 2 * q["g"] * dh
        + 2 * q["dpsi"] / q["psi"] * dh
    )
    return ResidualReport.from_series("quotient", res)


def symmetry_axis_rotation_kernel(traj: Trajectory, n_phi: int = 16) -> float:
    """max |<R, nu>| for the rotation about the symmetry axis, over samples and angles.

    Evaluated in R^3 coordinates (the first two ambient directions carry the
    rotation for every n).
    """
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    r, z, th = traj.r[:, None], traj.z[:, None], traj.theta[:, None]
    X = np.stack(np.broadcast_arrays(r * np.cos(phi), r * np.sin(phi), z + 0 * phi), axis=-1)
    nu = np.stack(
        np.broadcast_arrays(-np.sin(th) * np.cos(phi), -np.sin(th) * np.sin(phi), np.cos(th) + 0 * phi),
        axis=-1,
    )
    R = RotationField.SYMMETRY_AXIS.vector(X)
    return float(np.max(np.abs(np.sum(R * nu, axis=-1))))


# --------------------------------------------------------------------------
# finite-difference oracle


def local_flow(traj: Trajectory, index: np.ndarray, ds: float, tol: float = 1e-14) -> np.ndarray:
    """States at s_k - ds, s_k, s_k + ds obtained by tight local re-integration.

    Returns an array of shape (len(index), 3, 3): [point, offset, (r, z, theta)].
    Independent of the trajectory's own step sequence and dense output.
    """
    n, C = traj.params.n, traj.params.C

    def f(y):
        return _rhs(y[0], y[1], y[2], n, C)

    out = np.empty((len(index), 3, 3))
    for m, k in enumerate(index):
        y0 = (traj.r[k], traj.z[k], traj.theta[k])
        out[m, 1] = y0
        for col, sgn in ((0, -1.0), (2, 1.0)):
            res = rk.dopri(f, 0.0, y0, sgn * ds, tol=tol, h0=ds / 4, h_min=1e-16, h_max=ds)
            out[m, col] = res.y[-1]
    return out


def fd_kernel_residuals(
    traj: Trajectory, ds: float, stride: int = 1, skip: int = 2, r_min: float | None = None,
) -> dict[str, ResidualReport]:
    """Mode-0, mode-1 and quotient residuals with centred-difference derivatives.

    psi and g are evaluated on locally re-integrated neighbours at +-ds, so the
    derivatives carry O(ds^2) truncation error and none of the analytic
    identities used by the primary path.
    """
    idx = np.arange(skip, len(traj) - skip, stride)
    # keep the +-ds neighbours well away from the axis
    idx = idx[traj.r[idx] > (10 * ds if r_min is None else r_min)]
    Y = local_flow(traj, idx, ds)
    r, z, th = Y[..., 0], Y[..., 1], Y[..., 2]
    psi = z * np.cos(th) - r * np.sin(th)
    g = r * np.cos(th) + z * np.sin(th)
    d1 = lambda f: (f[:, 2] - f[:, 0]) / (2 * ds)  # noqa: E731
    d2 = lambda f: (f[:, 2] - 2 * f[:, 1] + f[:, 0]) / ds**2  # noqa: E731
    p = traj.params
    rc, thc = r[:, 1], th[:, 1]
    psic, gc = psi[:, 1], g[:, 1]
    H = -1.0 / (p.C * psic)
    k2 = np.sin(thc) / rc
    k1 = H - (p.n - 1) * k2
    q = {"r": rc, "cos": np.cos(thc), "H": H, "A2": k1**2 + (p.n - 1) * k2**2, "g": gc}
    co = mode_coefficients(q, p)
    res0 = d2(psi) + co.c1 * d1(psi) + co.c0_mode0 * psic
    res1 = d2(g) + co.c1 * d1(g) + co.c0_mode1 * gc
    h, dh, d2h = quotient_terms(psic, d1(psi), d2(psi), gc, d1(g), d2(g))
    resq = (
        d2h + (p.n - 1) * q["cos"] / rc * dh - (p.n - 1) * h / rc**2
        + p.C * H**2 * gc * dh + 2 * d1(psi) / psic * dh
    )
    return {
        "kernel_mode0": ResidualReport.from_series("kernel_mode0_fd", res0, step=ds),
        "kernel_mode1": ResidualReport.from_series("kernel_mode1_fd", res1, step=ds),
        "quotient": ResidualReport.from_series("quotient_fd", resq, step=ds),
        "dpsi_error": ResidualReport.from_series(
            "dpsi_fd_minus_analytic", d1(psi) - (-k1 * gc), step=ds
        ),
        "dg_error": ResidualReport.from_series(
            "dg_fd_minus_analytic", d1(g) - (1 + k1 * psic), step=ds
        ),
    }


def fd_refinement(traj: Trajectory, steps=(1e-2, 5e-3, 2.5e-3), stride: int = 1) -> dict[str, ResidualReport]:
    """Run the finite-difference oracle at several steps and estimate orders."""
    # same nodes on every level
    r_min = 10 * max(steps)
    per_level = [fd_kernel_residuals(traj, ds, stride=stride, r_min=r_min) for ds in steps]
    return {
        key: refinement_report([lvl[key] for lvl in per_level])
        for key in per_level[0]
    }
