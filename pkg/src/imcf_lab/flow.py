"""Short-time inverse mean curvature flow of profile curves.

A profile (r_i, z_i) moves with the normal velocity -(1/H) nu, which is
(sin theta / H, -cos theta / H) in the (r, z)-plane.  Geometry comes from
centred differences in the sample index; open curves get two ghost points per
end by cubic extrapolation, closed curves are periodic.  Time stepping is
a second-order Runge-Kutta-Legendre super-step
(explicit, with a parabolic step limit that grows like the stage count
squared), and the curve is re-sampled to uniform arclength after every
step except around probe times, where three consecutive levels are kept on the
same material points so time derivatives follow the normal motion.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CFLViolation, InsufficientTimeLevels, MeanCurvatureCollapse, WindowEscape
from .geometry import ExpanderParams
from .reports import ResidualReport

STAGES = 5
# Largest dt * max(1/H^2) / ds^2 accepted with STAGES stages.  Noisy
# cylinders stay smooth up to 2.5 and blow up by 3.0 (theory: 3.5).
CFL_LIMIT = 2.0


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-4
    t_end: float = 0.1
    n_s: int = 201
    window: tuple[float, float] = (0.2, 0.8)
    probe_times: tuple[float, ...] = ()
    cfl_limit: float = CFL_LIMIT
    stages: int = STAGES
    probe_settle: int = 4
    # half-width of a probe in flow steps
    probe_substeps: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.t_end <= 0.5:
            raise ValueError("t_end must lie in (0, 0.5]")
        if self.probe_substeps < 1:
            raise ValueError("probe_substeps must be >= 1")
        if self.stages < 2:
            raise ValueError("need at least 2 stages")
        if self.n_s < 8:
            raise ValueError("n_s must be at least 8")
        a, b = self.window
        if not (0.2 <= a < b <= 0.8):
            raise ValueError("window must be a sub-interval of [0.2, 0.8] in arclength fraction")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True, eq=False)
class CurveFlowState:
    t: float
    r: np.ndarray
    z: np.ndarray
    H: np.ndarray
    nu: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True, eq=False)
class Probe:
    """Three time levels t - dt, t, t + dt on the same material points.

    Here ``dt`` is the probe half-width, a whole number of flow steps.
    """

    t: float
    dt: float
    levels: tuple[np.ndarray, np.ndarray, np.ndarray]  # each (2, N): r, z


@dataclass(eq=False)
class FlowResult:
    states: list[CurveFlowState]
    probes: list[Probe]
    initial: np.ndarray  # (2, N)
    params: ExpanderParams
    config: FlowConfig
    closed: bool
    ds: float
    max_cfl: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def final(self) -> CurveFlowState:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "i", "r", "z", "H"])
        for st in self.states:
            for i, (r, z, H) in enumerate(zip(st.r.tolist(), st.z.tolist(), st.H.tolist())):
                w.writerow([repr(st.t), i, repr(r), repr(z), repr(H)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


# --------------------------------------------------------------------------
# discrete geometry


def _pad(f: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        return np.concatenate([f[-2:], f, f[:2]])
    lo1 = 4 * f[0] - 6 * f[1] + 4 * f[2] - f[3]
    lo2 = 4 * lo1 - 6 * f[0] + 4 * f[1] - f[2]
    hi1 = 4 * f[-1] - 6 * f[-2] + 4 * f[-3] - f[-4]
    hi2 = 4 * hi1 - 6 * f[-1] + 4 * f[-2] - f[-3]
    return np.concatenate([[lo2, lo1], f, [hi1, hi2]])


def _diff(f: np.ndarray, closed: bool, accuracy: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """First and second index derivatives (unit parameter spacing), order 2 or 4."""
    p = _pad(f, closed)
    if accuracy == 2:
        return 0.5 * (p[3:-1] - p[1:-3]), p[3:-1] - 2 * p[2:-2] + p[1:-3]
    if accuracy == 4:
        m2, m1, c, p1, p2 = p[:-4], p[1:-3], p[2:-2], p[3:-1], p[4:]
        return (m2 - 8 * m1 + 8 * p1 - p2) / 12, (-m2 + 16 * m1 - 30 * c + 16 * p1 - p2) / 12
    raise ValueError("accuracy must be 2 or 4")


def curve_geometry(r: np.ndarray, z: np.ndarray, n: int, closed: bool, accuracy: int = 2) -> dict[str, np.ndarray]:
    r_t, r_tt = _diff(r, closed, accuracy)
    z_t, z_tt = _diff(z, closed, accuracy)
    v = np.hypot(r_t, z_t)
    c, s = r_t / v, z_t / v
    k1 = (r_t * z_tt - z_t * r_tt) / v**3
    k2 = s / r
    H = k1 + (n - 1) * k2
    return {
        "v": v, "cos": c, "sin": s, "theta": np.arctan2(s, c), "kappa1": k1, "kappa2": k2,
        "H": H, "A2": k1**2 + (n - 1) * k2**2, "psi": z * c - r * s, "g": r * c + z * s,
    }


def arclength_derivatives(f: np.ndarray, v: np.ndarray, closed: bool, accuracy: int = 2) -> tuple[np.ndarray, np.ndarray]:
    f_t, f_tt = _diff(f, closed, accuracy)
    v_t, _ = _diff(v, closed, accuracy)
    return f_t / v, (f_tt - f_t * v_t / v) / v**2


def _velocity(y: np.ndarray, n: int, closed: bool) -> np.ndarray:
    q = curve_geometry(y[0], y[1], n, closed)
    H = q["H"]
    if not np.all(H > 0):
        raise MeanCurvatureCollapse(f"min H = {np.nanmin(H):.3e}")
    return np.stack([q["sin"] / H, -q["cos"] / H])


def _rkl2_coefficients(stages: int):
    """Second-order Runge-Kutta-Legendre recursion coefficients."""
    S = stages
    b = [1 / 3, 1 / 3, 1 / 3] + [(j * j + j - 2) / (2 * j * (j + 1)) for j in range(3, S + 1)]
    a = [1 - bj for bj in b]
    w1 = 4 / (S * S + S - 2)
    coef = [None, (b[1] * w1,)]
    for j in range(2, S + 1):
        mu = (2 * j - 1) / j * b[j] / b[j - 1]
        nu = -(j - 1) / j * b[j] / b[j - 2]
        mu_t = mu * w1
        coef.append((mu, nu, mu_t, -a[j - 1] * mu_t))
    return coef


def _rkl2(y: np.ndarray, dt: float, n: int, closed: bool, stages: int) -> np.ndarray:
    """One explicit RKL2 super-step.

    Stable on the diffusive spectrum for dt * lambda_max <= (S^2 + S - 2) / 2,
    about S^2 / 4 times the forward-Euler limit.
    """
    coef = _rkl2_coefficients(stages)
    L0 = _velocity(y, n, closed)
    prev2, prev = y, y + coef[1][0] * dt * L0
    for j in range(2, stages + 1):
        mu, nu, mu_t, gam_t = coef[j]
        cur = (
            mu * prev + nu * prev2 + (1 - mu - nu) * y
            + mu_t * dt * _velocity(prev, n, closed) + gam_t * dt * L0
        )
        prev2, prev = prev, cur
    return prev


def _arclength(y: np.ndarray, closed: bool) -> np.ndarray:
    pts = np.concatenate([y, y[:, :1]], axis=1) if closed else y
    seg = np.hypot(*np.diff(pts, axis=1))
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample(y: np.ndarray, closed: bool) -> np.ndarray:
    """Uniform-arclength re-sampling through a cubic spline (endpoints fixed)."""
    L = _arclength(y, closed)
    N = y.shape[1]
    if closed:
        pts = np.concatenate([y, y[:, :1]], axis=1)
        spl = CubicSpline(L, pts, axis=1, bc_type="periodic")
        return spl(np.linspace(0, L[-1], N + 1)[:-1])
    spl = CubicSpline(L, y, axis=1)
    return spl(np.linspace(0, L[-1], N))


def _state(t: float, y: np.ndarray, n: int, closed: bool) -> CurveFlowState:
    q = curve_geometry(y[0], y[1], n, closed)
    return CurveFlowState(
        t=t, r=y[0].copy(), z=y[1].copy(), H=q["H"],
        nu=np.stack([-q["sin"], q["cos"]]), phi=-1.0 / q["H"],
    )


def _cfl(y: np.ndarray, dt: float, n: int, closed: bool) -> float:
    q = curve_geometry(y[0], y[1], n, closed)
    ds = np.max(np.diff(_arclength(y, closed)))
    return float(dt * np.max(1.0 / q["H"] ** 2) / ds**2)


# --------------------------------------------------------------------------
# initial profiles


def cylinder_profile(rho: float, z_range: tuple[float, float], n_s: int) -> np.ndarray:
    z = np.linspace(z_range[0], z_range[1], n_s)
    return np.stack([np.full(n_s, float(rho)), z])


def sphere_profile(rho: float, n_s: int) -> np.ndarray:
    """Full circle in the (r, z)-plane; points straddle, never hit, the axis."""
    offset = 0.5 if n_s % 2 == 0 else 0.25
    a = 2 * np.pi * (np.arange(n_s) + offset) / n_s
    return np.stack([rho * np.sin(a), -rho * np.cos(a)])


def trajectory_profile(traj, s_range: tuple[float, float], n_s: int) -> np.ndarray:
    s = np.linspace(s_range[0], s_range[1], n_s)
    Y = traj.at(s)
    return np.stack([Y[:, 0], Y[:, 1]])


# --------------------------------------------------------------------------
# flow


def imcf_flow(initial: np.ndarray, config: FlowConfig, params: ExpanderParams, closed: bool = False) -> FlowResult:
    """Flow the profile ``initial`` (shape (2, N)) to ``config.t_end``.

    A probe (three material time levels) is recorded at each of
    ``config.probe_times`` and, always, centred on ``t_end``.
    """
    n = params.n
    y = np.asarray(initial, dtype=float)
    if y.ndim != 2 or y.shape[0] != 2:
        raise ValueError("initial profile must have shape (2, N)")
    if not np.all(curve_geometry(y[0], y[1], n, closed)["H"] > 0):
        raise MeanCurvatureCollapse("H must be positive on the initial profile")
    dt = config.dt
    ds = float(np.max(np.diff(_arclength(y, closed))))
    steps = config.n_steps
    m = config.probe_substeps
    probe_steps = sorted({int(round(t / dt)) for t in config.probe_times} | {steps})
    if probe_steps[0] < m:
        raise ValueError("probe times must be at least one probe span after t = 0")
    # no re-sampling while a probe's material levels are being generated,
    # nor for a few steps before, so grid-scale interpolation noise decays
    hold = set()
    for P in probe_steps:
        hold.update(range(max(0, P - m - config.probe_settle), P + 1))
    states = [_state(0.0, y, n, closed)]
    probes: list[Probe] = []
    max_cfl = 0.0
    pending: dict[int, np.ndarray] = {P: y for P in probe_steps if P == m}
    for k in range(1, steps + 1):
        mu = _cfl(y, dt, n, closed)
        max_cfl = max(max_cfl, mu)
        if mu > config.cfl_limit:
            raise CFLViolation(f"dt * max(1/H^2) / ds^2 = {mu:.3f} > {config.cfl_limit}")
        y = _rkl2(y, dt, n, closed, config.stages)
        if not np.all(np.isfinite(y)):
            raise MeanCurvatureCollapse(f"non-finite positions at t = {k * dt:.4g}")
        if k + m in probe_steps:
            pending[k + m] = y
        if k in pending:
            y_hi = y
            for _ in range(m):
                y_hi = _rkl2(y_hi, dt, n, closed, config.stages)
            probes.append(Probe(t=k * dt, dt=m * dt, levels=(pending.pop(k), y, y_hi)))
        if k not in hold:
            y = resample(y, closed)
        if k == steps or (config.snapshot_every and k % config.snapshot_every == 0):
            states.append(_state(k * dt, y, n, closed))
    return FlowResult(
        states=states, probes=probes, initial=np.asarray(initial, dtype=float), params=params,
        config=config, closed=closed, ds=ds, max_cfl=max_cfl,
    )


def _window_mask(y: np.ndarray, closed: bool, window: tuple[float, float]) -> np.ndarray:
    if closed:
        return np.ones(y.shape[1], dtype=bool)
    L = _arclength(y, closed)
    frac = L / L[-1]
    return (frac >= window[0]) & (frac <= window[1])


def dilation_compare(result: FlowResult, reference=None, state: CurveFlowState | None = None) -> float:
    """Sup over the interior window of the distance from the flowed curve to e^{Ct} times the initial curve.

    ``reference`` maps arclength to (2, m) points of the initial profile and
    carries ``domain``; by default a cubic spline through the initial samples.
    """
    st = state or result.final
    lam = math.exp(result.params.C * st.t)
    closed = result.closed
    if reference is None:
        y0 = result.initial
        L = _arclength(y0, closed)
        pts = np.concatenate([y0, y0[:, :1]], axis=1) if closed else y0
        spl = CubicSpline(L, pts, axis=1, bc_type="periodic" if closed else "not-a-knot")
        domain = (0.0, float(L[-1]))
    else:
        spl, domain = reference, reference.domain
    d_spl = spl.derivative() if hasattr(spl, "derivative") else None

    y = np.stack([st.r, st.z])
    sel = _window_mask(y, closed, result.config.window)
    Q = y[:, sel]
    grid = np.linspace(domain[0], domain[1], 20 * y.shape[1])
    G = lam * spl(grid)
    d2 = (Q[0][:, None] - G[0][None, :]) ** 2 + (Q[1][:, None] - G[1][None, :]) ** 2
    s = grid[np.argmin(d2, axis=1)]
    h = grid[1] - grid[0]
    for _ in range(30):
        # minimise |Q - lam X(s)|^2 by secant-free Newton on the projection condition
        X, dX = lam * spl(s), lam * (d_spl(s) if d_spl else (spl(s + h) - spl(s - h)) / (2 * h))
        f = np.sum((X - Q) * dX, axis=0)
        d2X = lam * (spl(s, 2) if d_spl else (spl(s + h) - 2 * spl(s) + spl(s - h)) / h**2)
        fp = np.sum(dX * dX, axis=0) + np.sum((X - Q) * d2X, axis=0)
        step = f / fp
        s = s - step
        if not closed:
            s = np.clip(s, domain[0], domain[1])
        if np.max(np.abs(step)) < 1e-14 * max(1.0, domain[1] - domain[0]):
            break
    if not closed:
        edge = 1e-9 * (domain[1] - domain[0])
        if np.any(s <= domain[0] + edge) or np.any(s >= domain[1] - edge):
            raise WindowEscape("closest point on the dilated initial curve lies at its boundary")
    else:
        s = np.mod(s - domain[0], domain[1] - domain[0]) + domain[0]
    X = lam * spl(s)
    return float(np.max(np.hypot(*(X - Q))))


def _probe(result: FlowResult, index: int) -> Probe:
    if not result.probes:
        raise InsufficientTimeLevels("no probe with three time levels was recorded")
    return result.probes[index]


def _probe_fields(result: FlowResult, probe: Probe, accuracy: int = 2):
    n, closed = result.params.n, result.closed
    qm, q0, qp = (curve_geometry(y[0], y[1], n, closed, accuracy) for y in probe.levels)
    y0 = probe.levels[1]
    sel = _window_mask(y0, closed, result.config.window)
    phi = -1.0 / q0["H"]
    dphi, d2phi = arclength_derivatives(phi, q0["v"], closed, accuracy)
    return qm, q0, qp, phi, dphi, d2phi, sel


def evolution_checks(result: FlowResult, probe_index: int = -1, accuracy: int = 2) -> tuple[ResidualReport, ResidualReport]:
    """Evolution of H and nu under the normal motion phi nu, phi = -1/H.

    (1) dH/dt - (phi'' + (n-1)(r'/r) phi' + |A|^2 phi)
    (2) dnu/dt + phi' T     (componentwise, sup of the Euclidean norm)
    """
    pr = _probe(result, probe_index)
    n = result.params.n
    qm, q0, qp, phi, dphi, d2phi, sel = _probe_fields(result, pr, accuracy)
    dt2 = 2 * pr.dt
    r = pr.levels[1][0]
    res_H = (qp["H"] - qm["H"]) / dt2 - (d2phi + (n - 1) * q0["cos"] / r * dphi + q0["A2"] * phi)
    dnu_r = (-qp["sin"] + qm["sin"]) / dt2 + dphi * q0["cos"]
    dnu_z = (qp["cos"] - qm["cos"]) / dt2 + dphi * q0["sin"]
    res_nu = np.hypot(dnu_r, dnu_z)
    step = result.ds
    return (
        ResidualReport.from_series("evolve_H", res_H[sel], step=step),
        ResidualReport.from_series("evolve_nu", res_nu[sel], step=step),
    )


def support_variation_check(result: FlowResult, probe_index: int = -1, accuracy: int = 2) -> ResidualReport:
    """d<F,nu>/dt - (phi - <F, grad phi>) = dpsi/dt - (phi - g phi')."""
    pr = _probe(result, probe_index)
    qm, q0, qp, phi, dphi, _, sel = _probe_fields(result, pr, accuracy)
    res = (qp["psi"] - qm["psi"]) / (2 * pr.dt) - (phi - q0["g"] * dphi)
    return ResidualReport.from_series("support_variation", res[sel], step=result.ds)
