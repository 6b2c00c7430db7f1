"""Serialization: trajectory CSV, JSON reports with run manifests, SVG profiles."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import NotASoliton, WrongBranch
from .geometry import ExpanderParams
from .shooting import TerminationCause, Trajectory

CSV_COLUMNS = ("s", "r", "z", "theta", "H", "kappa1", "kappa2", "A2", "psi", "g", "res_soliton")
OUT_ENV = "IMCF_LAB_OUT"


def fmt(x: float) -> str:
    """17 significant digits: every double survives a text round trip."""
    return format(float(x), ".17g")


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


# --------------------------------------------------------------------------
# manifest


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed
        return "0+unknown"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return t.isoformat().replace("+00:00", "Z")


@dataclass
class RunManifest:
    command: str
    parameters: dict[str, Any]
    seed: int = 0
    version: str = field(default_factory=_version)
    timestamp: str = field(default_factory=_timestamp)

    def to_dict(self) -> dict:
        return asdict(self)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enum
        return obj.value
    return obj


def dumps_report(report: dict, manifest: RunManifest) -> str:
    doc = {"manifest": manifest.to_dict(), **report}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_report(path: str | Path, report: dict, manifest: RunManifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report, manifest))
    return path


# --------------------------------------------------------------------------
# trajectory CSV


def trajectory_rows(traj: Trajectory) -> list[list[float]]:
    q = traj.geometry
    res = -1.0 / q["H"] - traj.params.C * q["psi"]
    cols = [traj.s, traj.r, traj.z, traj.theta, q["H"], q["kappa1"], q["kappa2"], q["A2"], q["psi"], q["g"], res]
    return np.column_stack(cols).tolist()


def dumps_trajectory(traj: Trajectory) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(fmt(v) for v in row) for row in trajectory_rows(traj)]
    return "\n".join(lines) + "\n"


def write_trajectory(path: str | Path, traj: Trajectory) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_trajectory(traj))
    return path


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def read_trajectory(
    path: str | Path, params: ExpanderParams, tol: float = 1e-10,
    termination: TerminationCause = TerminationCause.REACHED_S_MAX,
) -> Trajectory:
    """Load a trajectory CSV and check it against the recorded derived columns.

    Raises WrongBranch if any recorded psi is >= 0 or disagrees in sign with
    the value recomputed from (r, z, theta), and NotASoliton if the recorded
    H and psi violate -1/H = C psi by more than 100 * tol.
    """
    t = read_table(path)
    missing = [c for c in ("s", "r", "z", "theta") if c not in t]
    if missing:
        raise ValueError(f"missing columns: {missing}")
    s, r, z, th = t["s"], t["r"], t["z"], t["theta"]
    if "psi" in t:
        psi_rec = t["psi"]
        psi = z * np.cos(th) - r * np.sin(th)
        if np.any(psi_rec >= 0) or np.any(np.sign(psi_rec) != np.sign(psi)):
            raise WrongBranch("recorded support function psi is not negative")
        if "H" in t:
            res = np.abs(-1.0 / t["H"] - params.C * psi_rec)
            if np.max(res) > 100 * tol:
                raise NotASoliton(f"recorded soliton residual {np.max(res):.3e}")
    if np.any(z * np.cos(th) - r * np.sin(th) >= 0):
        raise WrongBranch("support function psi >= 0 in the loaded trajectory")
    direction = 1 if s.size < 2 or s[-1] >= s[0] else -1
    return Trajectory(s=s, r=r, z=z, theta=th, termination=termination, params=params, direction=direction)


# --------------------------------------------------------------------------
# SVG


def render_svg(
    curves: Sequence[tuple[np.ndarray, np.ndarray]],
    radii: Sequence[float] = (),
    width: int = 640,
    title: str | None = None,
) -> str:
    """Profile curves and their mirror images across the rotation axis.

    The axis (r = 0) is drawn horizontally and dashed; each radius in
    ``radii`` is drawn as a pair of dotted horizontals at +-rho.  The view
    box fits all content with a 5% margin.
    """
    zs = np.concatenate([np.asarray(z, float) for _, z in curves]) if curves else np.zeros(1)
    rs = np.concatenate([np.abs(np.asarray(r, float)) for r, _ in curves]) if curves else np.zeros(1)
    rmax = max([float(rs.max())] + [abs(float(x)) for x in radii] + [1e-12])
    x0, x1 = float(zs.min()), float(zs.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - rmax, x1 + rmax
    y0, y1 = -rmax, rmax
    mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    vx, vy, vw, vh = x0 - mx, y0 - my, (x1 - x0) + 2 * mx, (y1 - y0) + 2 * my
    height = max(1, int(round(width * vh / vw)))
    stroke = fmt(0.004 * max(vw, vh))

    def pts(x, y):
        # svg y grows downwards; flip so +r is up
        return " ".join(f"{fmt(a)},{fmt(-b)}" for a, b in zip(x, y))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{fmt(vx)} {fmt(-(vy + vh))} {fmt(vw)} {fmt(vh)}">',
    ]
    if title:
        out.append(f"<title>{title}</title>")
    out.append(
        f'<line class="axis" x1="{fmt(vx)}" y1="0" x2="{fmt(vx + vw)}" y2="0" '
        f'stroke="gray" stroke-width="{stroke}" stroke-dasharray="{fmt(4 * float(stroke))},{fmt(2 * float(stroke))}"/>'
    )
    for rho in radii:
        for sgn in (1, -1):
            y = fmt(-sgn * rho)
            out.append(
                f'<line class="radius" x1="{fmt(vx)}" y1="{y}" x2="{fmt(vx + vw)}" y2="{y}" '
                f'stroke="steelblue" stroke-width="{stroke}" stroke-dasharray="{stroke},{fmt(2 * float(stroke))}"/>'
            )
    for r, z in curves:
        r, z = np.asarray(r, float), np.asarray(z, float)
        for sgn, cls in ((1, "profile"), (-1, "mirror")):
            out.append(
                f'<polyline class="{cls}" fill="none" stroke="black" stroke-width="{stroke}" '
                f'points="{pts(z, sgn * r)}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
