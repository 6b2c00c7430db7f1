"""Smooth non-soliton profile curves for identity checks.

Each generator samples a closed-form parametrisation on a uniform parameter
grid and returns ``(r, z, h)``.
"""

from __future__ import annotations

import numpy as np


def catenoid(h: float, z_range: tuple[float, float] = (-1.0, 1.0)) -> tuple[np.ndarray, np.ndarray, float]:
    """r = cosh z, the minimal catenoid in R^3 (H = 0 for n = 2)."""
    z = _grid(z_range, h)
    return np.cosh(z), z, h


def ellipse(h: float, a: float = 1.5, b: float = 1.0, t_range=(0.3, np.pi - 0.3)):
    """Spheroid profile r = a sin t, z = -b cos t, kept off the axis."""
    t = _grid(t_range, h)
    return a * np.sin(t), -b * np.cos(t), h


def torus(h: float, R: float = 2.0, rho: float = 0.7, t_range=(-2.5, 2.5)):
    """Meridian circle of a torus, r = R + rho cos t, z = rho sin t."""
    t = _grid(t_range, h)
    return R + rho * np.cos(t), rho * np.sin(t), h


PROFILES = {"catenoid": catenoid, "ellipse": ellipse, "torus": torus}


def _grid(rng, h: float) -> np.ndarray:
    m = int(round((rng[1] - rng[0]) / h))
    return rng[0] + h * np.arange(m + 1)
