"""Triangulated surfaces of revolution in R^3 and a discrete version of L.

The Laplacian is the cotangent formula with mixed Voronoi areas, the gradient
is the per-triangle linear-interpolation gradient averaged to vertices with
area weights.  Curvature data at vertices are exact values pulled from the
profile, so only the differential operators are discretised.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateRange, MeshTooCoarse
from .geometry import ExpanderParams, soliton_arrays
from .reports import ResidualReport, refinement_report

BOUNDARY_RINGS = 2


@dataclass(frozen=True, eq=False)
class MeshOfRevolution:
    n_s: int
    n_phi: int
    s: np.ndarray          # (n_s,)
    phi: np.ndarray        # (n_phi,)
    vertices: np.ndarray   # (n_s * n_phi, 3), index i * n_phi + j
    faces: np.ndarray      # (m, 3)
    normals: np.ndarray    # exact unit normals
    H: np.ndarray
    A2: np.ndarray
    psi: np.ndarray
    g: np.ndarray
    params: ExpanderParams

    @property
    def h(self) -> float:
        """Largest edge length."""
        v = self.vertices[self.faces]
        e = np.linalg.norm(v - np.roll(v, 1, axis=1), axis=-1)
        return float(e.max())

    def interior(self) -> np.ndarray:
        """Vertex mask excluding the boundary rings at both profile ends."""
        ring = np.arange(self.n_s)
        keep = (ring >= BOUNDARY_RINGS) & (ring < self.n_s - BOUNDARY_RINGS)
        return np.repeat(keep, self.n_phi)

    def support_function(self) -> np.ndarray:
        return np.sum(self.vertices * self.normals, axis=1)

    def orthogonal_rotation_function(self) -> np.ndarray:
        """<R, nu> for R = (z, 0, -x), the rotation in the (x, z)-plane."""
        x, z = self.vertices[:, 0], self.vertices[:, 2]
        return z * self.normals[:, 0] - x * self.normals[:, 2]

    def triangle_quality(self) -> float:
        """Smallest ratio of triangle area to squared longest edge."""
        v = self.vertices[self.faces]
        area = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
        e = np.linalg.norm(v - np.roll(v, 1, axis=1), axis=-1).max(axis=1)
        return float(np.min(area / e**2))

    def to_obj(self) -> str:
        lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in self.vertices.tolist()]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.faces.tolist()]
        return "\n".join(lines) + "\n"

    def write_obj(self, path: str | Path) -> None:
        Path(path).write_text(self.to_obj())


def _faces(n_s: int, n_phi: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(n_s - 1), np.arange(n_phi), indexing="ij")
    i, j = i.ravel(), j.ravel()
    jp = (j + 1) % n_phi
    a = i * n_phi + j
    b = (i + 1) * n_phi + j
    c = (i + 1) * n_phi + jp
    d = i * n_phi + jp
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def build_mesh(traj, s_range: tuple[float, float], n_s: int, n_phi: int) -> MeshOfRevolution:
    """Mesh the surface generated by ``traj`` over the arclength interval ``s_range``.

    ``traj`` is anything with ``at(s) -> (m, 3)`` states and ``params`` (a
    Trajectory).  Only n = 2 (surfaces in R^3) is supported.
    """
    params = traj.params
    if params.n != 2:
        raise ValueError("meshes are built for n = 2 only")
    if n_s < 8 or n_phi < 8:
        raise MeshTooCoarse(f"{n_s} x {n_phi} mesh; need at least 8 x 8")
    a, b = map(float, s_range)
    lo, hi = min(traj.s[0], traj.s[-1]), max(traj.s[0], traj.s[-1])
    if not (a < b and lo <= a and b <= hi):
        raise DegenerateRange(f"s_range {s_range} not inside [{lo}, {hi}]")
    s = np.linspace(a, b, n_s)
    Y = traj.at(s)
    r, z, th = Y[:, 0], Y[:, 1], Y[:, 2]
    if np.any(r <= 0):
        raise DegenerateRange("profile touches the axis inside s_range")
    q = soliton_arrays(r, z, th, params)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    cp, sp = np.cos(phi), np.sin(phi)
    R = r[:, None]
    verts = np.stack(np.broadcast_arrays(R * cp, R * sp, z[:, None] + 0 * cp), -1).reshape(-1, 3)
    st, ct = np.sin(th)[:, None], np.cos(th)[:, None]
    normals = np.stack(np.broadcast_arrays(-st * cp, -st * sp, ct + 0 * cp), -1).reshape(-1, 3)
    rep = lambda v: np.repeat(v, n_phi)  # noqa: E731
    return MeshOfRevolution(
        n_s=n_s, n_phi=n_phi, s=s, phi=phi, vertices=verts, faces=_faces(n_s, n_phi),
        normals=normals, H=rep(q["H"]), A2=rep(q["A2"]), psi=rep(q["psi"]), g=rep(q["g"]),
        params=params,
    )


def _cot(u, v):
    return np.sum(u * v, axis=1) / np.linalg.norm(np.cross(u, v), axis=1)


def cotan_laplacian(mesh: MeshOfRevolution, f: np.ndarray) -> np.ndarray:
    """Mixed-Voronoi cotangent Laplacian of vertex values ``f``."""
    V, F = mesh.vertices, mesh.faces
    nv = len(V)
    lap = np.zeros(nv)
    area = np.zeros(nv)
    p = [V[F[:, k]] for k in range(3)]
    tri_area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]), axis=1)
    # angle at corner k, opposite edge between k+1 and k+2
    cots = [_cot(p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]) for k in range(3)]
    obtuse = [np.sum((p[(k + 1) % 3] - p[k]) * (p[(k + 2) % 3] - p[k]), axis=1) < 0 for k in range(3)]
    any_obtuse = obtuse[0] | obtuse[1] | obtuse[2]
    for k in range(3):
        i, j = F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        w = 0.5 * cots[k]
        df = f[j] - f[i]
        np.add.at(lap, i, w * df)
        np.add.at(lap, j, -w * df)
    for k in range(3):
        v = F[:, k]
        e1 = p[(k + 1) % 3] - p[k]
        e2 = p[(k + 2) % 3] - p[k]
        vor = (np.sum(e1**2, 1) * cots[(k + 2) % 3] + np.sum(e2**2, 1) * cots[(k + 1) % 3]) / 8
        a = np.where(any_obtuse, np.where(obtuse[k], tri_area / 2, tri_area / 4), vor)
        np.add.at(area, v, a)
    return lap / area


def vertex_gradient(mesh: MeshOfRevolution, f: np.ndarray) -> np.ndarray:
    """Area-weighted average of per-triangle gradients of the linear interpolant."""
    V, F = mesh.vertices, mesh.faces
    p = [V[F[:, k]] for k in range(3)]
    N = np.cross(p[1] - p[0], p[2] - p[0])
    dbl = np.linalg.norm(N, axis=1)
    nhat = N / dbl[:, None]
    grad_t = np.zeros_like(N)
    for k in range(3):
        e = p[(k + 2) % 3] - p[(k + 1) % 3]  # edge opposite corner k
        grad_t += f[F[:, k], None] * np.cross(nhat, e)
    grad_t /= dbl[:, None]
    acc = np.zeros_like(V)
    wsum = np.zeros(len(V))
    for k in range(3):
        np.add.at(acc, F[:, k], grad_t * dbl[:, None])
        np.add.at(wsum, F[:, k], dbl)
    return acc / wsum[:, None]


def discrete_L_residual(mesh: MeshOfRevolution, f: np.ndarray, name: str = "discrete_L") -> ResidualReport:
    """Delta f + C H^2 <F, grad f> + (|A|^2 - C H^2) f on interior vertices."""
    C = mesh.params.C
    lap = cotan_laplacian(mesh, f)
    grad = vertex_gradient(mesh, f)
    CH2 = C * mesh.H**2
    res = lap + CH2 * np.sum(mesh.vertices * grad, axis=1) + (mesh.A2 - CH2) * f
    return ResidualReport.from_series(name, res[mesh.interior()], step=mesh.h)


def mesh_refinement(traj, s_range, levels=((16, 16), (32, 32), (64, 64))) -> dict[str, ResidualReport]:
    """Both kernel functions over a sequence of meshes; orders from >= 3 levels."""
    out: dict[str, list[ResidualReport]] = {"support": [], "rotation": []}
    for n_s, n_phi in levels:
        m = build_mesh(traj, s_range, n_s, n_phi)
        out["support"].append(discrete_L_residual(m, m.support_function(), "mesh_support"))
        out["rotation"].append(discrete_L_residual(m, m.orthogonal_rotation_function(), "mesh_rotation"))
    return {k: refinement_report(v) for k, v in out.items()}
