"""Profile-curve geometry of rotationally symmetric hypersurfaces.

A hypersurface of revolution in R^{n+1} is generated by a unit-speed curve
(r(s), z(s)) with r' = cos(theta), z' = sin(theta), rotated about the z-axis:

    F(s, w) = (r(s) w, z(s)),   w in S^{n-1}.

The unit normal is nu = (-sin(theta) w, cos(theta)); it points toward the
axis on cylinders and spheres, so H > 0 and <F, nu> < 0 there.  With this
choice the principal curvatures are theta' (profile direction, once) and
sin(theta)/r (rotational directions, n-1 times).

The expander equation -1/H = C <F, nu> then reads

    theta' = -1/(C psi) - (n-1) sin(theta)/r,   psi = z cos(theta) - r sin(theta).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AxisSingular, InsufficientSmoothness, WrongBranch, ZeroMeanCurvature
from .reports import ResidualReport


@dataclass(frozen=True)
class ExpanderParams:
    """Dimension ``n`` of the hypersurface and the expander constant ``C``."""

    n: int = 2
    C: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ValueError(f"C must be positive, got {self.C!r}")

    @classmethod
    def cylinder(cls, n: int = 2) -> "ExpanderParams":
        """Constant for which every round cylinder S^{n-1} x R is an expander."""
        return cls(n=n, C=1.0 / (n - 1))

    @classmethod
    def sphere(cls, n: int = 2) -> "ExpanderParams":
        """Constant for which every round sphere centred at 0 is an expander."""
        return cls(n=n, C=1.0 / n)


@dataclass(frozen=True, slots=True)
class ProfileState:
    s: float
    r: float
    z: float
    theta: float

    def scaled(self, lam: float) -> "ProfileState":
        return ProfileState(lam * self.s, lam * self.r, lam * self.z, self.theta)


@dataclass(frozen=True, slots=True)
class GeometricSample:
    kappa1: float
    kappa2: float
    H: float
    A2: float
    psi: float
    g: float


class RotationField(enum.Enum):
    """Ambient rotation generators used by the kernel checks.

    ``SYMMETRY_AXIS`` rotates the (x1, x2)-plane about the z-axis, e.g.
    R(x, y, z) = (-y, x, 0) in R^3.  ``ORTHOGONAL_AXIS`` rotates the
    (x1, z)-plane: R(X) = (z, 0, ..., 0, -x1).
    """

    SYMMETRY_AXIS = "symmetry-axis"
    ORTHOGONAL_AXIS = "orthogonal-axis"

    def vector(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        R = np.zeros_like(X)
        if self is RotationField.SYMMETRY_AXIS:
            R[..., 0] = -X[..., 1]
            R[..., 1] = X[..., 0]
        else:
            R[..., 0] = X[..., -1]
            R[..., -1] = -X[..., 0]
        return R


def support(r, z, theta):
    """<F, nu> = z cos(theta) - r sin(theta)."""
    return z * np.cos(theta) - r * np.sin(theta)


def tangential_support(r, z, theta):
    """<F, T> = r cos(theta) + z sin(theta)."""
    return r * np.cos(theta) + z * np.sin(theta)


def _rhs(r: float, z: float, theta: float, n: int, C: float) -> tuple[float, float, float]:
    # unchecked scalar kernel used by the integrator
    c = math.cos(theta)
    s = math.sin(theta)
    psi = z * c - r * s
    return c, s, -1.0 / (C * psi) - (n - 1) * s / r


def ode_rhs(state: ProfileState, params: ExpanderParams) -> tuple[float, float, float]:
    """Return (dr/ds, dz/ds, dtheta/ds) of the expander profile ODE."""
    if state.r <= 0:
        raise AxisSingular(f"r = {state.r!r} <= 0")
    psi = state.z * math.cos(state.theta) - state.r * math.sin(state.theta)
    if psi >= 0:
        raise WrongBranch(f"support function psi = {psi!r} >= 0")
    return _rhs(state.r, state.z, state.theta, params.n, params.C)


def geometric_sample(
    state: ProfileState, params: ExpanderParams, kappa1: float | None = None
) -> GeometricSample:
    """Curvatures and support functions at one profile point.

    ``kappa1`` defaults to the value forced by the expander ODE; pass the
    curve's own profile curvature to evaluate an arbitrary (non-soliton) curve.
    """
    r, z, th = state.r, state.z, state.theta
    if r <= 0:
        raise AxisSingular(f"r = {r!r} <= 0")
    n = params.n
    c, s = math.cos(th), math.sin(th)
    psi = z * c - r * s
    g = r * c + z * s
    k2 = s / r
    if kappa1 is None:
        if psi >= 0:
            raise WrongBranch(f"support function psi = {psi!r} >= 0")
        kappa1 = -1.0 / (params.C * psi) - (n - 1) * k2
    H = kappa1 + (n - 1) * k2
    A2 = kappa1 * kappa1 + (n - 1) * k2 * k2
    return GeometricSample(kappa1=kappa1, kappa2=k2, H=H, A2=A2, psi=psi, g=g)


def soliton_residual(sample: GeometricSample, params: ExpanderParams) -> float:
    """-1/H - C <F, nu>; zero exactly on expanders."""
    if sample.H == 0:
        raise ZeroMeanCurvature("H = 0")
    return -1.0 / sample.H - params.C * sample.psi


def soliton_arrays(r, z, theta, params: ExpanderParams) -> dict[str, np.ndarray]:
    """Vectorised geometric samples plus analytic arclength derivatives on the ODE.

    The derivative identities used are psi' = -kappa1 g, g' = 1 + kappa1 psi,
    H' = C H^2 psi' (differentiating H = -1/(C psi)) and
    kappa2' = cos(theta) (kappa1 - kappa2) / r.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r <= 0):
        raise AxisSingular("r <= 0 in sample array")
    n, C = params.n, params.C
    c, s = np.cos(theta), np.sin(theta)
    psi = z * c - r * s
    if np.any(psi >= 0):
        raise WrongBranch("support function psi >= 0 in sample array")
    g = r * c + z * s
    k2 = s / r
    H = -1.0 / (C * psi)
    k1 = H - (n - 1) * k2
    A2 = k1**2 + (n - 1) * k2**2
    dpsi = -k1 * g
    dg = 1.0 + k1 * psi
    dH = C * H**2 * dpsi
    dk2 = c * (k1 - k2) / r
    dk1 = dH - (n - 1) * dk2
    d2psi = -dk1 * g - k1 * dg
    d2g = dk1 * psi + k1 * dpsi
    return {
        "r": r, "z": z, "theta": theta, "cos": c, "sin": s,
        "kappa1": k1, "kappa2": k2, "H": H, "A2": A2, "psi": psi, "g": g,
        "dpsi": dpsi, "d2psi": d2psi, "dg": dg, "d2g": d2g, "dH": dH, "dkappa1": dk1,
    }


def curve_arrays(r, z, h: float, n: int, accuracy: int = 4) -> dict[str, np.ndarray]:
    """Geometry of an arbitrary sampled profile by centred finite differences.

    ``r`` and ``z`` are samples on a uniform grid of a smooth parameter with
    spacing ``h`` (not necessarily arclength).  ``accuracy`` is the stencil
    order (2 or 4); with half-width w = accuracy/2, first-level quantities
    are valid on ``[w:-w]`` and their derivatives on ``[2w:-2w]`` (NaN
    elsewhere).  Arclength derivatives use d/ds = (1/v) d/dt with
    v = |(r_t, z_t)|.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if accuracy not in (2, 4):
        raise ValueError("accuracy must be 2 or 4")
    w = accuracy // 2
    if r.size < 4 * w + 1:
        raise InsufficientSmoothness(f"need at least {4 * w + 1} samples for second derivatives")
    _d1, _d2 = (_d1_2, _d2_2) if accuracy == 2 else (_d1_4, _d2_4)
    r_t, z_t = _d1(r, h), _d1(z, h)
    r_tt, z_tt = _d2(r, h), _d2(z, h)
    v = np.hypot(r_t, z_t)
    c, s = r_t / v, z_t / v
    k1 = (r_t * z_tt - z_t * r_tt) / v**3
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = s / r
    H = k1 + (n - 1) * k2
    A2 = k1**2 + (n - 1) * k2**2
    psi = z * c - r * s
    g = r * c + z * s
    psi_t = _d1(psi, h)
    psi_tt = _d2(psi, h)
    v_t = _d1(v, h)
    dpsi = psi_t / v
    d2psi = (psi_tt - psi_t * v_t / v) / v**2
    dH = _d1(H, h) / v
    return {
        "r": r, "z": z, "v": v, "cos": c, "sin": s, "kappa1": k1, "kappa2": k2,
        "H": H, "A2": A2, "psi": psi, "g": g, "dpsi": dpsi, "d2psi": d2psi, "dH": dH,
    }


def _d1_2(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    return out


def _d2_2(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / (h * h)
    return out


def _d1_4(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    return out


def _d2_4(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full_like(f, np.nan)
    out[2:-2] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
    return out


def evolution_identity_residual(r, z, h: float, params: ExpanderParams, accuracy: int = 4) -> ResidualReport:
    """Residual of Delta<F,nu> + <F, grad H> + |A|^2 <F,nu> + H on a sampled profile.

    The identity holds on every hypersurface, expander or not; on a surface of
    revolution its rotationally invariant part is

        psi'' + (n-1)(r'/r) psi' + g H' + |A|^2 psi + H.

    Every derivative is taken by centred differences of the samples, so the
    residual measures only the discretisation error, O(h^accuracy).
    """
    q = curve_arrays(r, z, h, params.n, accuracy)
    res = (
        q["d2psi"]
        + (params.n - 1) * q["cos"] / q["r"] * q["dpsi"]
        + q["g"] * q["dH"]
        + q["A2"] * q["psi"]
        + q["H"]
    )
    w = accuracy
    return ResidualReport.from_series("evolution_identity", res[w:-w], step=h)
