"""Dormand-Prince 5(4) stepper with PI step control, dense output and events.

Written for small systems (a handful of components) where per-step numpy
overhead would dominate: the stage loop works on plain tuples of floats.
Accepted steps are kept with their stage derivatives so the solution can be
evaluated anywhere by the 4th-order continuous extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# 5th-order minus embedded 4th-order weights
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# continuous extension: y(s0 + x h) = y0 + h * sum_k K_k * poly_k(x)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
# Gustafsson PI exponents for a 5th-order error estimate
ALPHA = 0.7 / 5
BETA = 0.4 / 5


@dataclass
class Event:
    """Scalar function of the state; the integration stops where it changes sign.

    ``direction`` = +1 only triggers on increasing crossings, -1 on decreasing,
    0 on both.
    """

    name: str
    fn: Callable[[Sequence[float]], float]
    direction: int = 0


@dataclass
class DenseSolution:
    """Accepted steps of one integration run, in integration order."""

    s0: np.ndarray
    h: np.ndarray
    y0: np.ndarray
    K: np.ndarray = field(repr=False)

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        sign = 1.0 if self.h.size == 0 or self.h[0] > 0 else -1.0
        ends = self.s0 + self.h
        idx = np.searchsorted(sign * ends, sign * s, side="left")
        idx = np.clip(idx, 0, self.s0.size - 1)
        x = (s - self.s0[idx]) / self.h[idx]
        powers = np.stack([x, x**2, x**3, x**4], axis=-1)  # (m, 4)
        Q = np.einsum("mkd,kj->mjd", self.K[idx], _P)  # (m, 4, d)
        return self.y0[idx] + self.h[idx, None] * np.einsum("mj,mjd->md", powers, Q)


@dataclass
class RKResult:
    s: np.ndarray
    y: np.ndarray
    status: str
    event: str | None
    dense: DenseSolution
    n_rejected: int = 0
    max_error: float = 0.0


def _stages(f, s, y, h, k1):
    d = len(y)
    K = [k1]
    for i in range(1, 7):
        a = _A[i]
        yi = tuple(y[j] + h * sum(a[m] * K[m][j] for m in range(i)) for j in range(d))
        K.append(tuple(f(yi)))
    ynew = tuple(y[j] + h * sum(_B[m] * K[m][j] for m in range(6)) for j in range(d))
    # K[6] was evaluated at ynew (FSAL)
    err = max(abs(h * sum(_E[m] * K[m][j] for m in range(7))) for j in range(d))
    return ynew, K, err


def _dense_point(y0, h, K, x):
    px = np.array([x, x * x, x**3, x**4])
    w = _P @ px
    return tuple(y0[j] + h * sum(w[m] * K[m][j] for m in range(7)) for j in range(len(y0)))


def dopri(
    f: Callable[[Sequence[float]], Sequence[float]],
    s0: float,
    y0: Sequence[float],
    s_end: float,
    tol: float,
    h0: float,
    h_min: float,
    h_max: float,
    events: Sequence[Event] = (),
    event_tol: float = 1e-12,
    max_steps: int = 2_000_000,
) -> RKResult:
    """Integrate y' = f(y) from ``s0`` to ``s_end`` (either direction).

    Local error is the max-norm of the embedded difference and is kept
    <= ``tol`` on every accepted step.  Status is one of "end", "event",
    "underflow", "failure", "max_steps".
    """
    sign = 1.0 if s_end >= s0 else -1.0
    y = tuple(float(v) for v in y0)
    s = float(s0)
    h = min(abs(h0), h_max)
    k1 = tuple(f(y))
    s_list, y_list = [s], [y]
    st0, hs, ys, Ks = [], [], [], []
    err_prev = 1.0
    rejected = 0
    max_err = 0.0
    ev_vals = [ev.fn(y) for ev in events]
    status, hit = "end", None

    for _ in range(max_steps):
        remaining = abs(s_end - s)
        if remaining <= 1e-15 * max(1.0, abs(s_end)):
            break
        last = h >= remaining
        hh = remaining if last else h
        try:
            ynew, K, err = _stages(f, s, y, sign * hh, k1)
        except (ZeroDivisionError, OverflowError, ValueError):
            ynew, K, err = None, None, math.inf
        if err is None or not math.isfinite(err) or any(not math.isfinite(v) for v in ynew or (math.nan,)):
            err = math.inf
        en = err / tol
        if en > 1.0:
            rejected += 1
            fac = FAC_MIN if not math.isfinite(en) else max(FAC_MIN, SAFETY * en ** (-1 / 5))
            h = hh * fac
            if h < h_min:
                status = "underflow" if math.isfinite(err) else "failure"
                break
            continue

        max_err = max(max_err, err)
        snew = s_end if last else s + sign * hh
        new_vals = [ev.fn(ynew) for ev in events]
        crossings = []
        for i, ev in enumerate(events):
            a, b = ev_vals[i], new_vals[i]
            if (a < 0 <= b and ev.direction >= 0) or (a > 0 >= b and ev.direction <= 0):
                x = _locate(ev, y, sign * hh, K, a, event_tol / hh)
                crossings.append((x, i))
        st0.append(s)
        hs.append(sign * hh)
        ys.append(y)
        Ks.append(K)
        if crossings:
            x, i = min(crossings)
            ye = _dense_point(y, sign * hh, K, x)
            s_list.append(s + sign * hh * x)
            y_list.append(ye)
            status, hit = "event", events[i].name
            break
        s, y, k1 = snew, ynew, K[6]
        s_list.append(s)
        y_list.append(y)
        ev_vals = new_vals
        fac = SAFETY * max(en, 1e-10) ** (-ALPHA) * err_prev**BETA
        h = hh * min(FAC_MAX, max(FAC_MIN, fac))
        h = min(h, h_max)
        err_prev = max(en, 1e-4)
        if last:
            break
    else:
        status = "max_steps"

    dense = DenseSolution(
        s0=np.asarray(st0, dtype=float),
        h=np.asarray(hs, dtype=float),
        y0=np.asarray(ys, dtype=float).reshape(-1, len(y)),
        K=np.asarray(Ks, dtype=float).reshape(-1, 7, len(y)),
    )
    return RKResult(
        s=np.asarray(s_list), y=np.asarray(y_list), status=status, event=hit,
        dense=dense, n_rejected=rejected, max_error=max_err,
    )


def _locate(ev: Event, y0, h, K, f0: float, xtol: float) -> float:
    """Bisect the dense interpolant of one step for the event's sign change."""
    lo, hi = 0.0, 1.0
    flo = f0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = ev.fn(_dense_point(y0, h, K, mid))
        if (flo < 0) == (fm < 0) and fm != 0:
            lo, flo = mid, fm
        else:
            hi = mid
    return hi
