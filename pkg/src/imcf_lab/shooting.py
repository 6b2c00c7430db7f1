"""Integration, axis shooting and two-ended sweeps for the expander profile ODE."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from . import rk
from .errors import AxisSingular, EmptyGrid, InvalidCap, NumericalFailure, WrongBranch
from .geometry import ExpanderParams, ProfileState, _rhs, soliton_arrays


class TerminationCause(enum.Enum):
    REACHED_S_MAX = "ReachedSMax"
    AXIS_HIT = "AxisHit"
    AXIS_CAP = "AxisCap"
    SUPPORT_VANISHING = "SupportVanishing"
    STEP_UNDERFLOW = "StepUnderflow"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control and event thresholds.

    ``psi_eps``: the support function is stopped at -psi_eps rather than 0;
    near a vanishing support the curvature grows like |psi|^-1 and psi
    behaves like sqrt(s* - s), so smaller floors are not resolvable in
    double precision arclength.

    ``axis_rel``: a closing cap is accepted once r <= axis_rel * |F| with the
    tangent within ``cap_tol`` of perpendicular to the axis.  The far pole
    of a cap is a repelling singular point (perturbations grow like
    r^-(n-1)), so integrating on to r = 0 only amplifies rounding.
    """

    rk_tol: float = 1e-10
    s_max: float = 200.0
    h_min: float = 1e-14
    h_max: float = 0.5
    startup_eps: float = 1e-6
    psi_eps: float = 1e-6
    axis_rel: float = 3e-2
    cap_tol: float = 1e-3
    event_tol: float = 1e-12
    max_steps: int = 200_000

    def __post_init__(self):
        if not (0 < self.h_min < self.h_max < self.s_max):
            raise ValueError("need 0 < h_min < h_max < s_max")
        if self.rk_tol <= 0:
            raise ValueError("rk_tol must be positive")
        if not 0 < self.axis_rel < 1:
            raise ValueError("need 0 < axis_rel < 1")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Integrated profile curve.

    ``s, r, z, theta`` are the accepted step points in integration order
    (arclength decreasing when ``direction == -1``).  ``dense`` evaluates the
    continuous extension anywhere inside the integrated range.
    """

    s: np.ndarray
    r: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    termination: TerminationCause
    params: ExpanderParams
    direction: int = 1
    dense: rk.DenseSolution | None = field(default=None, repr=False)
    max_local_error: float = 0.0

    def __len__(self) -> int:
        return self.s.size

    @property
    def states(self) -> list[ProfileState]:
        return [ProfileState(*v) for v in zip(self.s, self.r, self.z, self.theta)]

    @property
    def final(self) -> ProfileState:
        return ProfileState(self.s[-1], self.r[-1], self.z[-1], self.theta[-1])

    @cached_property
    def geometry(self) -> dict[str, np.ndarray]:
        """Vectorised geometric samples with analytic derivatives (see soliton_arrays)."""
        return soliton_arrays(self.r, self.z, self.theta, self.params)

    def soliton_residuals(self) -> np.ndarray:
        q = self.geometry
        return -1.0 / q["H"] - self.params.C * q["psi"]

    def at(self, s) -> np.ndarray:
        """(m, 3) array of (r, z, theta) at arclengths ``s`` from the dense output."""
        if self.dense is None:
            raise ValueError("trajectory carries no dense output")
        return self.dense(s)

    def scaled(self, lam: float) -> "Trajectory":
        dense = None
        if self.dense is not None:
            d = self.dense
            scale = np.array([lam, lam, 1.0])
            # K holds dy/ds; r, z derivatives are scale invariant, theta's scales as 1/lam
            dense = rk.DenseSolution(
                s0=lam * d.s0, h=lam * d.h, y0=d.y0 * scale, K=d.K / np.array([1.0, 1.0, lam]),
            )
        return replace(
            self, s=lam * self.s, r=lam * self.r, z=lam * self.z, dense=dense,
        )

    def reversed_concat(self, other: "Trajectory") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Join a -s trajectory (self) and a +s trajectory from the same start point.

        Returns (s, r, z) ordered by increasing arclength.
        """
        s = np.concatenate([self.s[::-1], other.s[1:]])
        r = np.concatenate([self.r[::-1], other.r[1:]])
        z = np.concatenate([self.z[::-1], other.z[1:]])
        return s, r, z


def _support(y) -> float:
    return y[1] * math.cos(y[2]) - y[0] * math.sin(y[2])


def integrate(
    initial: ProfileState,
    params: ExpanderParams,
    config: IntegratorConfig = IntegratorConfig(),
    direction: int = 1,
) -> Trajectory:
    """Integrate the expander ODE from ``initial`` up to arclength ``s_max`` away."""
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if initial.r <= 0:
        raise AxisSingular(f"initial r = {initial.r!r} <= 0")
    if _support((initial.r, initial.z, initial.theta)) >= 0:
        raise WrongBranch("initial state has psi >= 0")
    n, C = params.n, params.C

    def f(y):
        return _rhs(y[0], y[1], y[2], n, C)

    y0 = (initial.r, initial.z, initial.theta)
    if not all(math.isfinite(v) for v in f(y0)):
        raise NumericalFailure("non-finite vector field at the initial state")
    events = [
        rk.Event("axis", lambda y: y[0], -1),
        rk.Event("support", lambda y: _support(y) + config.psi_eps, +1),
    ]
    near = rk.Event("near_axis", lambda y: y[0] - config.axis_rel * math.hypot(y[0], y[1]), -1)
    s_end = initial.s + direction * config.s_max
    kw = dict(
        tol=config.rk_tol, h_min=config.h_min, h_max=config.h_max,
        event_tol=config.event_tol, max_steps=config.max_steps,
    )
    res = rk.dopri(f, initial.s, y0, s_end, h0=min(1e-3, config.h_max), events=events + [near], **kw)
    if res.status == "event" and res.event == "near_axis" and not _cap_like(res.y[-1], config):
        # oblique approach: follow it to the axis itself
        rest = rk.dopri(f, res.s[-1], res.y[-1], s_end, h0=abs(res.dense.h[-1]), events=events, **kw)
        res = _join(res, rest)
    cause = _termination(res, config)
    return Trajectory(
        s=res.s, r=res.y[:, 0].copy(), z=res.y[:, 1].copy(), theta=res.y[:, 2].copy(),
        termination=cause, params=params, direction=direction, dense=res.dense,
        max_local_error=res.max_error,
    )


def _cap_like(y, config: IntegratorConfig) -> bool:
    return 1.0 - abs(math.cos(y[2])) <= config.cap_tol


def _join(a: rk.RKResult, b: rk.RKResult) -> rk.RKResult:
    da, db = a.dense, b.dense
    # a's last step runs past its event point, where b restarts; the
    # overlapping interpolants agree to the step tolerance
    dense = rk.DenseSolution(
        s0=np.concatenate([da.s0, db.s0]), h=np.concatenate([da.h, db.h]),
        y0=np.concatenate([da.y0, db.y0]), K=np.concatenate([da.K, db.K]),
    )
    return rk.RKResult(
        s=np.concatenate([a.s, b.s[1:]]), y=np.concatenate([a.y, b.y[1:]]), status=b.status,
        event=b.event, dense=dense, n_rejected=a.n_rejected + b.n_rejected,
        max_error=max(a.max_error, b.max_error),
    )


def _termination(res: rk.RKResult, config: IntegratorConfig) -> TerminationCause:
    r, z, th = res.y[-1]
    if res.status == "end":
        return TerminationCause.REACHED_S_MAX
    if res.status == "event":
        if res.event == "support":
            return TerminationCause.SUPPORT_VANISHING
        if res.event == "near_axis" or _cap_like(res.y[-1], config):
            return TerminationCause.AXIS_CAP
        return TerminationCause.AXIS_HIT
    if res.status == "failure":
        return TerminationCause.NUMERICAL_FAILURE
    if res.status == "max_steps":
        return TerminationCause.STEP_UNDERFLOW
    scale = math.hypot(r, z)
    if r <= 1e-6 * scale:
        return TerminationCause.AXIS_HIT
    if abs(_support((r, z, th))) <= 1e-3 * scale:
        return TerminationCause.SUPPORT_VANISHING
    return TerminationCause.STEP_UNDERFLOW


def cap_series(s: float, z0: float, params: ExpanderParams) -> ProfileState:
    """Taylor start from the umbilic axis point (0, z0) with theta = 0.

    At the cap both principal curvatures equal H0/n with H0 = -1/(C z0).
    """
    k = -1.0 / (params.C * z0) / params.n
    return ProfileState(s=s, r=s - k * k * s**3 / 6.0, z=z0 + 0.5 * k * s * s, theta=k * s)


def shoot_axis(
    z0: float, params: ExpanderParams, config: IntegratorConfig = IntegratorConfig()
) -> Trajectory:
    """Expander through the axis point (0, z0), z0 < 0, leaving it horizontally."""
    if not z0 < 0:
        raise InvalidCap(f"z0 must be negative, got {z0!r}")
    start = cap_series(config.startup_eps, z0, params)
    return integrate(start, params, config, direction=1)


# --------------------------------------------------------------------------
# self-intersection


@dataclass(frozen=True)
class Crossing:
    s_i: float
    s_j: float
    r: float
    z: float


def detect_self_intersection(curve, r=None, z=None, min_separation: float = 10.0) -> list[Crossing]:
    """Transversal crossings of a profile curve with itself.

    ``curve`` is either a Trajectory (refined on its dense output) or a 1-D
    parameter array with ``r`` and ``z`` samples (refined on a cubic spline).
    Crossings whose parameters are within ``min_separation`` local steps of
    each other are ignored; the rest are refined until the two points agree
    to 1e-12 and deduplicated.
    """
    if isinstance(curve, Trajectory):
        p = np.asarray(curve.s, dtype=float)
        P = np.column_stack([curve.r, curve.z])
        if curve.direction < 0:
            p, P = p[::-1], P[::-1]
        if curve.dense is not None:
            def evaluate(t):
                y = curve.at(t)
                return y[:, :2]
        else:
            evaluate = _spline_evaluator(p, P)
    else:
        p = np.asarray(curve, dtype=float)
        P = np.column_stack([np.asarray(r, dtype=float), np.asarray(z, dtype=float)])
        evaluate = _spline_evaluator(p, P)
    return _find_crossings(p, P, evaluate, min_separation)


def _find_crossings(p, P, evaluate, min_separation: float) -> list[Crossing]:
    if p.size < 2:
        return []
    found = []
    for i, j, a, b in _segment_pairs(P):
        step = max(abs(p[i + 1] - p[i]), abs(p[j + 1] - p[j]))
        ti = p[i] + a * (p[i + 1] - p[i])
        tj = p[j] + b * (p[j + 1] - p[j])
        if abs(ti - tj) <= min_separation * step:
            continue
        ti, tj = _refine(evaluate, ti, tj, (p[0], p[-1]))
        pt = evaluate(np.array([ti]))[0]
        found.append((ti, tj, pt, step))

    crossings: list[Crossing] = []
    kept: list[tuple[float, float, float]] = []
    for ti, tj, pt, step in sorted(found, key=lambda x: (x[0], x[1])):
        if any(
            abs(ti - a) <= 2 * max(step, st) and abs(tj - b) <= 2 * max(step, st)
            for a, b, st in kept
        ):
            continue
        kept.append((ti, tj, step))
        crossings.append(Crossing(s_i=float(ti), s_j=float(tj), r=float(pt[0]), z=float(pt[1])))
    return crossings


def _spline_evaluator(p, P):
    spline = CubicSpline(p, P, axis=0)
    return lambda t: spline(np.asarray(t, dtype=float))


def _segment_pairs(P: np.ndarray):
    """Yield (i, j, a, b) for intersecting segments P[i]P[i+1], P[j]P[j+1], i < j - 1."""
    A, B = P[:-1], P[1:]
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    m = A.shape[0]
    cell = float(np.max(hi - lo))
    if cell == 0:
        return
    origin = lo.min(axis=0)
    ilo = np.floor((lo - origin) / cell).astype(int)
    ihi = np.floor((hi - origin) / cell).astype(int)
    buckets: dict[tuple[int, int], list[int]] = {}
    for k in range(m):
        for cx in range(ilo[k, 0], ihi[k, 0] + 1):
            for cy in range(ilo[k, 1], ihi[k, 1] + 1):
                buckets.setdefault((cx, cy), []).append(k)
    seen = set()
    for members in buckets.values():
        idx = np.asarray(members)
        if idx.size < 2:
            continue
        I, J = np.meshgrid(idx, idx, indexing="ij")
        mask = J > I + 1
        I, J = I[mask], J[mask]
        ok = np.all(lo[I] <= hi[J], axis=1) & np.all(lo[J] <= hi[I], axis=1)
        I, J = I[ok], J[ok]
        if I.size == 0:
            continue
        d1 = B[I] - A[I]
        d2 = B[J] - A[J]
        w = A[J] - A[I]
        den = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (w[:, 0] * d2[:, 1] - w[:, 1] * d2[:, 0]) / den
            b = (w[:, 0] * d1[:, 1] - w[:, 1] * d1[:, 0]) / den
        eps = 1e-12
        hit = (den != 0) & (a >= -eps) & (a <= 1 + eps) & (b >= -eps) & (b <= 1 + eps)
        for i, j, ai, bj in zip(I[hit], J[hit], a[hit], b[hit]):
            key = (int(i), int(j))
            if key not in seen:
                seen.add(key)
                yield int(i), int(j), float(ai), float(bj)


def _refine(evaluate, ti, tj, bounds, tol=1e-12, max_iter=30):
    """Newton iteration for P(ti) = P(tj) with finite-difference Jacobian."""
    lo, hi = min(bounds), max(bounds)
    for _ in range(max_iter):
        pts = evaluate(np.array([ti, tj]))
        F = pts[0] - pts[1]
        if np.max(np.abs(F)) <= tol:
            break
        h = 1e-7 * max(1.0, abs(ti), abs(tj))
        d = evaluate(np.array([ti + h, ti - h, tj + h, tj - h]))
        Ti = (d[0] - d[1]) / (2 * h)
        Tj = (d[2] - d[3]) / (2 * h)
        J = np.column_stack([Ti, -Tj])
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        ti = float(np.clip(ti + delta[0], lo, hi))
        tj = float(np.clip(tj + delta[1], lo, hi))
    return ti, tj


# --------------------------------------------------------------------------
# two-ended sweep


@dataclass
class SweepPoint:
    """Result of one grid point: both half-trajectories and their end verdicts."""

    index: tuple[int, int]
    beta: float
    theta0: float
    plus: Trajectory | None = None
    minus: Trajectory | None = None
    plus_end: object = None
    minus_end: object = None
    crossings: list[Crossing] = field(default_factory=list)
    skipped: str | None = None

    @property
    def two_cylindrical(self) -> bool:
        return (
            self.plus_end is not None and self.minus_end is not None
            and self.plus_end.cylindrical and self.minus_end.cylindrical
        )

    @property
    def radii(self) -> tuple[float | None, float | None]:
        rm = self.minus_end.rho if self.minus_end is not None else None
        rp = self.plus_end.rho if self.plus_end is not None else None
        return rm, rp

    @property
    def self_intersecting(self) -> bool:
        return len(self.crossings) > 0

    def distinct_radii(self, rel: float = 1e-6) -> bool:
        rm, rp = self.radii
        if rm is None or rp is None:
            return False
        return abs(rm - rp) > rel * max(rm, rp)


@dataclass
class SweepResult:
    points: list[SweepPoint]

    @property
    def candidates(self) -> list[SweepPoint]:
        """Grid points whose two ends are both cylindrical."""
        return [p for p in self.points if p.two_cylindrical]

    @property
    def bottles(self) -> list[SweepPoint]:
        """Candidates with distinct end radii and a self-intersecting profile."""
        return [p for p in self.candidates if p.distinct_radii() and p.self_intersecting]


def _sweep_one(args) -> SweepPoint:
    from .asymptotics import classify_end

    index, beta, theta0, params, config = args
    pt = SweepPoint(index=index, beta=beta, theta0=theta0)
    start = ProfileState(0.0, math.cos(beta), math.sin(beta), theta0)
    if _support((start.r, start.z, start.theta)) >= 0:
        pt.skipped = "WrongBranch"
        return pt
    pt.plus = integrate(start, params, config, direction=1)
    pt.minus = integrate(start, params, config, direction=-1)
    pt.plus_end = classify_end(pt.plus)
    pt.minus_end = classify_end(pt.minus)
    if pt.two_cylindrical:
        pt.crossings = _joined_crossings(pt.minus, pt.plus)
    return pt


def _joined_crossings(minus: Trajectory, plus: Trajectory) -> list[Crossing]:
    s, r, z = minus.reversed_concat(plus)
    keep = np.concatenate([[True], np.diff(s) > 0])
    s, r, z = s[keep], r[keep], z[keep]

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        out = np.empty((t.size, 2))
        neg = t < 0
        if np.any(neg):
            out[neg] = minus.at(t[neg])[:, :2]
        if np.any(~neg):
            out[~neg] = plus.at(t[~neg])[:, :2]
        return out

    return _find_crossings(s, np.column_stack([r, z]), evaluate, 10.0)


def sweep_bottle(
    beta_grid,
    theta0_grid,
    params: ExpanderParams,
    config: IntegratorConfig = IntegratorConfig(),
    workers: int | None = None,
) -> SweepResult:
    """Integrate both directions from every (beta, theta0) grid point.

    Start points are (cos beta, sin beta), i.e. unit distance from the
    origin; dilation invariance makes the distance redundant.  Points on the
    wrong branch (psi >= 0) are kept in the result with ``skipped`` set.
    Output is ordered by grid index regardless of ``workers``.
    """
    betas = [float(b) for b in beta_grid]
    thetas = [float(t) for t in theta0_grid]
    if not betas or not thetas:
        raise EmptyGrid("beta and theta0 grids must be non-empty")
    for b in betas:
        if not -math.pi / 2 < b < math.pi / 2:
            raise ValueError(f"beta = {b} outside (-pi/2, pi/2)")
    jobs = [
        ((i, j), b, t, params, config)
        for i, b in enumerate(betas)
        for j, t in enumerate(thetas)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_one, jobs))
    else:
        points = [_sweep_one(job) for job in jobs]
    points.sort(key=lambda p: p.index)
    return SweepResult(points=points)
