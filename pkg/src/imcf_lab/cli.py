"""imcf-lab command line: shoot, sweep-bottle, verify, render.

Exit codes: 0 success, 1 a verification check failed, 2 invalid flags,
3 integration or input failure, 4 sweep found no bottle in the grid.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io, verify
from .asymptotics import classify_end, tangential_support_ratio
from .errors import ImcfLabError
from .geometry import ExpanderParams
from .shooting import IntegratorConfig, TerminationCause, Trajectory, shoot_axis, sweep_bottle

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_ERROR, EXIT_NOT_FOUND = 0, 1, 2, 3, 4
NOT_FOUND = "not found in grid"
DEFAULT_THETA0 = (math.pi / 4, 3 * math.pi / 8, math.pi / 2, 5 * math.pi / 8, 3 * math.pi / 4)


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=2, help="hypersurface dimension (>= 2)")
    p.add_argument("--C", type=float, default=None, help="expander constant (default 1/(n-1))")
    p.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${io.OUT_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imcf-lab", description="Rotationally symmetric IMCF self-expanders.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shoot", help="integrate from an axis point and classify the end")
    _add_params(p)
    p.add_argument("--z0", type=float, default=-1.0, help="height of the axis point (< 0)")
    p.add_argument("--smax", type=float, default=200.0, help="arclength budget")
    p.add_argument("--name", default="shoot", help="output file stem")

    p = sub.add_parser("sweep-bottle", help="two-sided shooting over a (beta, theta0) grid")
    _add_params(p)
    p.add_argument("--beta-min", type=float, default=-0.4)
    p.add_argument("--beta-max", type=float, default=0.4)
    p.add_argument("--beta-step", type=float, default=0.05)
    p.add_argument("--theta0", type=float, nargs="+", default=list(DEFAULT_THETA0))
    p.add_argument("--smax", type=float, default=30.0, help="arclength budget per direction")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--name", default="sweep", help="output file stem")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=verify.SUITES)
    _add_params(p)
    p.add_argument("--input", type=Path, default=None, help="trajectory CSV (default: shoot from --z0)")
    p.add_argument("--z0", type=float, default=-1.0)
    p.add_argument("--smax", type=float, default=None)

    p = sub.add_parser("render", help="draw a profile CSV as SVG")
    p.add_argument("--input", type=Path, required=True, nargs="+", help="CSV files with r and z columns")
    p.add_argument("--radius", type=float, action="append", default=[], help="asymptotic radius (repeatable)")
    p.add_argument("--title", default=None)
    p.add_argument("--out", type=Path, required=True, help="SVG path")
    return parser


def _params(parser, args) -> ExpanderParams:
    if args.n < 2:
        parser.error("n must be >= 2")
    C = args.C if args.C is not None else 1.0 / (args.n - 1)
    if not (C > 0 and math.isfinite(C)):
        parser.error("C must be positive")
    if not args.tol > 0:
        parser.error("tol must be positive")
    return ExpanderParams(args.n, C)


def _out_dir(args) -> Path:
    out = args.out if args.out is not None else io.default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fail(msg: str, code: int = EXIT_ERROR) -> int:
    print(f"imcf-lab: {msg}", file=sys.stderr)
    return code


# shoot


def cmd_shoot(parser, args) -> int:
    params = _params(parser, args)
    if not args.z0 < 0:
        parser.error("z0 must be negative")
    if not args.smax > 0:
        parser.error("smax must be positive")
    manifest = io.RunManifest(
        "shoot", {"n": params.n, "C": params.C, "z0": args.z0, "s_max": args.smax, "rk_tol": args.tol}
    )
    try:
        traj = shoot_axis(args.z0, params, IntegratorConfig(rk_tol=args.tol, s_max=args.smax))
        end = classify_end(traj)
    except ImcfLabError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    out = _out_dir(args)
    io.write_trajectory(out / f"{args.name}.csv", traj)
    report = {
        "termination": traj.termination.value,
        "verdict": end.verdict.value,
        "rho_inf": end.rho,
        "classification": end.to_dict(),
        "n_steps": len(traj),
        "max_soliton_residual": float(np.max(np.abs(traj.soliton_residuals()))),
        "tolerances": {"rk_tol": args.tol, "soliton_residual": 10 * args.tol},
    }
    if end.cylindrical:
        report["tangential_support_ratio"] = tangential_support_ratio(traj)
    io.write_report(out / f"{args.name}.json", report, manifest)
    print(f"{end.verdict.value} rho_inf={end.rho}")
    return EXIT_OK


# sweep-bottle


def _grid(lo: float, hi: float, step: float) -> list[float]:
    m = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 12) for k in range(m + 1)]


def _joined(pt) -> Trajectory:
    s, r, z = pt.minus.reversed_concat(pt.plus)
    theta = np.concatenate([pt.minus.theta[::-1], pt.plus.theta[1:]])
    return Trajectory(s=s, r=r, z=z, theta=theta, termination=TerminationCause.REACHED_S_MAX, params=pt.plus.params)


def _verdict(end) -> str:
    return end.verdict.value if end is not None else ""


def sweep_table(result) -> str:
    head = "i,j,beta,theta0,minus_verdict,plus_verdict,rho_minus,rho_plus,crossings,skipped"
    lines = [head]
    for pt in result.points:
        rm, rp = pt.radii if not pt.skipped else (None, None)
        lines.append(",".join([
            str(pt.index[0]), str(pt.index[1]), io.fmt(pt.beta), io.fmt(pt.theta0),
            _verdict(pt.minus_end), _verdict(pt.plus_end),
            "" if rm is None else io.fmt(rm), "" if rp is None else io.fmt(rp),
            str(len(pt.crossings)), pt.skipped or "",
        ]))
    return "\n".join(lines) + "\n"


def cmd_sweep(parser, args) -> int:
    params = _params(parser, args)
    if not args.beta_step > 0 or args.beta_max < args.beta_min:
        parser.error("need beta-step > 0 and beta-max >= beta-min")
    if args.workers < 1:
        parser.error("workers must be >= 1")
    betas = _grid(args.beta_min, args.beta_max, args.beta_step)
    config = IntegratorConfig(rk_tol=args.tol, s_max=args.smax)
    manifest = io.RunManifest("sweep-bottle", {
        "n": params.n, "C": params.C, "beta_grid": betas, "theta0_grid": list(args.theta0),
        "s_max": args.smax, "rk_tol": args.tol,
    })
    try:
        result = sweep_bottle(betas, args.theta0, params, config, workers=args.workers)
    except ImcfLabError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    out = _out_dir(args)
    (out / f"{args.name}.csv").write_text(sweep_table(result))
    bottles = result.bottles
    distinct = [p for p in result.candidates if p.distinct_radii()]
    best = bottles[0] if bottles else (distinct[0] if distinct else None)
    status = "found" if bottles else NOT_FOUND
    report = {
        "status": status,
        "grid_points": len(result.points),
        "skipped": sum(1 for p in result.points if p.skipped),
        "two_cylindrical": [list(p.index) for p in result.candidates],
        "distinct_radii": [list(p.index) for p in distinct],
        "bottles": [list(p.index) for p in bottles],
        "tolerances": {"rk_tol": args.tol, "distinct_radii_rel": 1e-6},
    }
    if best is not None:
        rm, rp = best.radii
        report["rendered"] = {"index": list(best.index), "beta": best.beta, "theta0": best.theta0,
                              "rho_minus": rm, "rho_plus": rp, "crossings": len(best.crossings)}
        joined = _joined(best)
        io.write_trajectory(out / f"{args.name}_candidate.csv", joined)
        svg = io.render_svg([(joined.r, joined.z)], radii=[rm, rp], title=f"beta={best.beta:g} theta0={best.theta0:.6g}")
        (out / f"{args.name}_candidate.svg").write_text(svg)
    io.write_report(out / f"{args.name}.json", report, manifest)
    print(f"{len(result.points)} grid points, {len(result.candidates)} two-cylindrical, "
          f"{len(distinct)} with distinct radii, {len(bottles)} self-intersecting")
    if not bottles:
        print(f"status: {NOT_FOUND}", file=sys.stderr)
        return EXIT_NOT_FOUND
    print("status: found")
    return EXIT_OK


# verify


def cmd_verify(parser, args) -> int:
    params = _params(parser, args)
    params_doc = {"suite": args.suite, "n": params.n, "C": params.C, "rk_tol": args.tol}
    traj = None
    try:
        if args.input is not None:
            params_doc["input"] = str(args.input)
            traj = io.read_trajectory(args.input, params, args.tol)
        elif args.suite in ("kernels", "quotient", "flow", "mesh"):
            if not args.z0 < 0:
                parser.error("z0 must be negative")
            default_smax = {"flow": 40.0, "mesh": 20.0}.get(args.suite, 200.0)
            s_max = args.smax if args.smax is not None else default_smax
            params_doc.update(z0=args.z0, s_max=s_max)
            traj = shoot_axis(args.z0, params, IntegratorConfig(rk_tol=args.tol, s_max=s_max))
        result = verify.run(args.suite, traj, params.n, params.C, args.tol)
    except ImcfLabError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    except ValueError as exc:
        return _fail(str(exc))
    out = _out_dir(args)
    io.write_report(out / f"verify_{args.suite}.json", result, io.RunManifest("verify", params_doc))
    for c in result["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"{mark} {c['name']}: {c['value']:.3e} {c['relation']} {c['tolerance']:.3g}")
    return EXIT_OK if result["passed"] else EXIT_FAILED


# render


def cmd_render(parser, args) -> int:
    curves = []
    try:
        for path in args.input:
            t = io.read_table(path)
            if "r" not in t or "z" not in t:
                return _fail(f"{path}: needs r and z columns")
            curves.append((t["r"], t["z"]))
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    svg = io.render_svg(curves, radii=args.radius, title=args.title)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(svg)
    return EXIT_OK


COMMANDS = {"shoot": cmd_shoot, "sweep-bottle": cmd_sweep, "verify": cmd_verify, "render": cmd_render}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
