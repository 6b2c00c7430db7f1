"""Cylindrical ends: radius estimate, windowed growth statistics, verdicts.

An end is asymptotic to the cylinder of radius rho when it is a normal graph
r(z) = rho + u(z) over it with

    (a1)  sup |F - F_cyl|            -> 0
    (a2)  sup |nu_F - nu_cyl|        -> 0
    (a3)  sup |<F,nu_F> - <F_cyl,nu_cyl>| -> 0

or, in terms of u,

    (a1') sup |u| -> 0,  (a2') angular derivatives of u -> 0,  (a3') sup |z u_z| -> 0.

For a profile curve the sup over the sphere factor is a single value.  A
finite trajectory only shows trends, so each statistic is tracked over
successive arclength windows of the tail.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAGraphTail, WindowTooShort
from .shooting import TerminationCause, Trajectory

CONDITIONS = ("a1", "a2", "a3", "a1'", "a2'", "a3'")
# condition -> (EndWindowStats field, scales with length?)
_CONDITION_FIELDS = {
    "a1": ("sup_position_gap", True),
    "a2": ("sup_normal_gap", False),
    "a3": ("sup_support_gap", True),
    "a1'": ("sup_u", True),
    "a2'": ("sup_angular_Du", False),
    "a3'": ("sup_zuz", True),
}


@dataclass(frozen=True)
class CylinderModel:
    """Round cylinder about the z-axis.

    ``orientation`` is the sign of sin(theta) on the tail: +1 when the end runs
    towards increasing z along the integration direction.
    """

    rho: float
    z0: float
    rho_from_r: float
    discrepancy: float
    orientation: int = 1


@dataclass(frozen=True)
class GrowthThresholds:
    """Final-window limits; length-like statistics are measured relative to rho."""

    a1: float = 1e-3
    a2: float = 1e-3
    a3: float = 1e-2
    a1p: float = 1e-3
    a2p: float = 1e-3
    a3p: float = 1e-2
    slack: float = 0.05
    noise_floor: float = 1e-7
    n_windows: int = 4

    def limit(self, cond: str) -> float:
        return getattr(self, cond.replace("'", "p"))


@dataclass(frozen=True)
class EndWindowStats:
    window: tuple[float, float]
    n_samples: int
    sup_u: float
    sup_Du: float
    sup_zuz: float
    sup_position_gap: float
    sup_normal_gap: float
    sup_support_gap: float
    # derivatives of u along the sphere factor; identically zero for profiles
    sup_angular_Du: float = 0.0

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


class Verdict(enum.Enum):
    CYLINDRICAL_END = "CylindricalEnd"
    AXIS_CAP = "AxisCap"
    SUPPORT_SINGULAR = "SupportSingular"
    CURVATURE_SINGULAR = "CurvatureSingular"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class GrowthReport:
    stats: list[EndWindowStats]
    passed: dict[str, bool]
    decreasing: dict[str, bool]
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


@dataclass
class EndClassification:
    verdict: Verdict
    model: CylinderModel | None = None
    evidence: list[EndWindowStats] = field(default_factory=list)
    conditions: dict[str, bool] = field(default_factory=dict)
    reason: str = ""

    @property
    def cylindrical(self) -> bool:
        return self.verdict is Verdict.CYLINDRICAL_END

    @property
    def rho(self) -> float | None:
        return self.model.rho if self.cylindrical and self.model else None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "reason": self.reason, "conditions": self.conditions}
        if self.model is not None:
            out["cylinder"] = {
                "rho": self.model.rho,
                "rho_from_r": self.model.rho_from_r,
                "discrepancy": self.model.discrepancy,
                "z0": self.model.z0,
                "orientation": self.model.orientation,
            }
        out["windows"] = [w.to_dict() for w in self.evidence]
        return out


def _graph_tail(traj: Trajectory) -> slice:
    """Longest trailing run of samples on which sin(theta) keeps one sign."""
    sgn = np.sign(np.sin(traj.theta))
    last = sgn[-1]
    if last == 0:
        raise NotAGraphTail("sin(theta) = 0 at the end of the trajectory")
    bad = np.nonzero(sgn != last)[0]
    start = bad[-1] + 1 if bad.size else 0
    return slice(start, None)


def estimate_cylinder(traj: Trajectory, tail_fraction: float = 0.1) -> CylinderModel:
    """Radius of the limiting cylinder from the trailing part of a trajectory.

    rho is the median of -sign(sin theta) * psi over the last ``tail_fraction``
    of the arclength; the median of r over the same samples is returned as an
    independent estimate, and their difference as a convergence diagnostic.
    """
    if traj.termination is not TerminationCause.REACHED_S_MAX:
        raise NotAGraphTail(f"trajectory ended with {traj.termination.value}; no tail to fit")
    s = np.abs(traj.s - traj.s[0])
    L = s[-1]
    sel = s >= (1 - tail_fraction) * L
    if np.count_nonzero(sel) < 3:
        raise WindowTooShort("fewer than 3 samples in the trailing window")
    sin = np.sin(traj.theta[sel])
    if np.any(np.sign(sin) != np.sign(sin[-1])) or np.min(np.abs(sin)) < 0.5:
        raise NotAGraphTail("sin(theta) not bounded away from 0 in the trailing window")
    sigma = int(np.sign(sin[-1]))
    psi = traj.z[sel] * np.cos(traj.theta[sel]) - traj.r[sel] * sin
    rho = float(np.median(-sigma * psi))
    rho_r = float(np.median(traj.r[sel]))
    tail = _graph_tail(traj)
    return CylinderModel(
        rho=rho,
        z0=float(traj.z[tail][0]),
        rho_from_r=rho_r,
        discrepancy=abs(rho - rho_r),
        orientation=sigma,
    )


def _window_stats(r, z, theta, model: CylinderModel, lo, hi) -> EndWindowStats:
    sigma = model.orientation
    c, s = np.cos(theta), np.sin(theta)
    u = r - model.rho
    uz = c / s
    psi = z * c - r * s
    normal_gap = np.sqrt((sigma - s) ** 2 + c**2)
    return EndWindowStats(
        window=(float(lo), float(hi)),
        n_samples=int(r.size),
        sup_u=float(np.max(np.abs(u))),
        sup_Du=float(np.max(np.abs(uz))),
        sup_zuz=float(np.max(np.abs(z * uz))),
        sup_position_gap=float(np.max(np.abs(u))),
        sup_normal_gap=float(np.max(normal_gap)),
        sup_support_gap=float(np.max(np.abs(psi + sigma * model.rho))),
    )


def check_growth_conditions(
    traj: Trajectory, model: CylinderModel, thresholds: GrowthThresholds = GrowthThresholds()
) -> GrowthReport:
    """Windowed sup statistics for (a1)-(a3) and (a1')-(a3') on the graph tail.

    A condition passes when its statistic never grows by more than
    ``slack`` from one window to the next (values under the noise floor count
    as zero) and the last window is below its threshold.
    """
    tail = _graph_tail(traj)
    s = np.abs(traj.s[tail] - traj.s[0])
    r, z, theta = traj.r[tail], traj.z[tail], traj.theta[tail]
    k = thresholds.n_windows
    if k < 3:
        raise ValueError("need at least 3 windows")
    edges = np.linspace(s[0], s[-1], k + 1)
    stats = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (s >= lo) & (s <= hi)
        if np.count_nonzero(sel) < 3:
            raise WindowTooShort(f"window [{lo:.3g}, {hi:.3g}] holds fewer than 3 samples")
        stats.append(_window_stats(r[sel], z[sel], theta[sel], model, lo, hi))

    passed, decreasing, notes = {}, {}, {}
    for cond in CONDITIONS:
        name, length_like = _CONDITION_FIELDS[cond]
        scale = model.rho if length_like else 1.0
        seq = [getattr(w, name) / scale for w in stats]
        floor = thresholds.noise_floor
        ok = all(
            b <= floor or b <= (1 + thresholds.slack) * a for a, b in zip(seq[:-1], seq[1:])
        )
        decreasing[cond] = ok
        passed[cond] = ok and seq[-1] <= thresholds.limit(cond)
    notes["a2'"] = "angular derivatives of u vanish identically under rotational symmetry"
    return GrowthReport(stats=stats, passed=passed, decreasing=decreasing, notes=notes)


def graph_bound_check(traj: Trajectory, model: CylinderModel) -> float:
    """max over the graph tail of |<F,nu_F> - <F_cyl,nu_cyl>| - (|F - F_cyl| + |F_cyl| |nu_F - nu_cyl|).

    The bound follows from the triangle and Cauchy-Schwarz inequalities, so
    the result is <= 0 up to rounding.
    """
    tail = _graph_tail(traj)
    r, z, theta = traj.r[tail], traj.z[tail], traj.theta[tail]
    sigma = model.orientation
    c, s = np.cos(theta), np.sin(theta)
    lhs = np.abs(z * c - r * s + sigma * model.rho)
    pos_gap = np.abs(r - model.rho)
    normal_gap = np.sqrt((sigma - s) ** 2 + c**2)
    rhs = pos_gap + np.hypot(model.rho, z) * normal_gap
    return float(np.max(lhs - rhs))


def classify_end(
    traj: Trajectory, thresholds: GrowthThresholds = GrowthThresholds()
) -> EndClassification:
    cause = traj.termination
    if cause is TerminationCause.AXIS_CAP:
        return EndClassification(Verdict.AXIS_CAP, reason="profile closes on the axis")
    if cause is TerminationCause.SUPPORT_VANISHING:
        return EndClassification(Verdict.SUPPORT_SINGULAR, reason="support function reached 0")
    if cause in (TerminationCause.AXIS_HIT, TerminationCause.STEP_UNDERFLOW):
        return EndClassification(Verdict.CURVATURE_SINGULAR, reason=cause.value)
    if cause is not TerminationCause.REACHED_S_MAX:
        return EndClassification(Verdict.INCONCLUSIVE, reason=cause.value)
    try:
        model = estimate_cylinder(traj)
        report = check_growth_conditions(traj, model, thresholds)
    except (NotAGraphTail, WindowTooShort) as exc:
        return EndClassification(Verdict.INCONCLUSIVE, reason=str(exc))
    if not report.all_passed:
        failed = [c for c, ok in report.passed.items() if not ok]
        return EndClassification(
            Verdict.INCONCLUSIVE, model=model, evidence=report.stats,
            conditions=report.passed, reason="failed " + ", ".join(failed),
        )
    return EndClassification(
        Verdict.CYLINDRICAL_END, model=model, evidence=report.stats, conditions=report.passed,
    )


def tangential_support_ratio(traj: Trajectory) -> float:
    """Estimate of lim g/s along the end.

    Uses the secant slope of g over the trailing half of the trajectory,
    which has the same limit as g/s but without the O(1/s) offset.
    """
    g = traj.r * np.cos(traj.theta) + traj.z * np.sin(traj.theta)
    s = traj.s - traj.s[0]
    mid = int(np.searchsorted(np.abs(s), 0.5 * abs(s[-1])))
    return float((g[-1] - g[mid]) / (s[-1] - s[mid]))
