"""Residual reports and refinement-order estimates."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class ResidualReport:
    """Named residual series with norms.

    ``l2`` is the root-mean-square of the series.  ``levels`` holds the
    (step, sup) pairs of a refinement study; ``order`` is only set when at
    least three levels are present.
    """

    name: str
    residual: np.ndarray = field(repr=False)
    sup: float
    l2: float
    step: float | None = None
    tolerance: float | None = None
    levels: tuple[tuple[float, float], ...] = ()
    order: float | None = None

    @classmethod
    def from_series(cls, name, residual, step=None, tolerance=None) -> "ResidualReport":
        res = np.asarray(residual, dtype=float)
        if res.size == 0:
            sup = l2 = 0.0
        else:
            sup = float(np.max(np.abs(res)))
            l2 = float(np.sqrt(np.mean(res**2)))
        return cls(name=name, residual=res, sup=sup, l2=l2, step=step, tolerance=tolerance)

    @property
    def passed(self) -> bool | None:
        if self.tolerance is None:
            return None
        return bool(np.isfinite(self.sup) and self.sup <= self.tolerance)

    def with_tolerance(self, tol: float) -> "ResidualReport":
        return replace(self, tolerance=tol)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "sup": self.sup,
            "l2": self.l2,
            "step": self.step,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "n_samples": int(self.residual.size),
        }
        if self.levels:
            out["levels"] = [{"step": h, "sup": e} for h, e in self.levels]
            out["order"] = self.order
        return out


def estimate_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    h = np.log(np.asarray(steps, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(h, e, 1)
    return float(slope)


def refinement_report(reports: list[ResidualReport], tolerance=None) -> ResidualReport:
    """Fold per-level reports (coarse to fine) into one report on the finest level."""
    levels = tuple((float(r.step), float(r.sup)) for r in reports)
    order = None
    if len(levels) >= 3:
        order = estimate_order([h for h, _ in levels], [e for _, e in levels])
    finest = reports[-1]
    return replace(finest, levels=levels, order=order, tolerance=tolerance)
