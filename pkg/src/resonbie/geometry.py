"""Boundary discretization: scatterers, flat panels, collocation data.

Scatterer boundaries are split into straight panels.  Collocation points
are the panel midpoints; normals are unit vectors pointing into the
exterior domain.  Curvature of the true boundary is recovered only
through refinement, except for the known circle curvature stored per
panel (used by one analytic corner-case correction in the assembler).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError

MIN_CIRCLE_PANELS = 8
STRIP_HALF_WIDTH = 0.5


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError(f"circle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Polyline:
    """Closed polygonal scatterer; vertices in order, last edge closes the loop."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ConfigError("polyline scatterer needs at least 3 vertices")


Scatterer = Circle | Polyline


@dataclass
class BoundaryMesh:
    """Flat-panel mesh of one or more closed scatterer boundaries.

    Arrays are indexed by panel.  ``curvature`` holds the signed curvature
    of the underlying smooth boundary at the panel midpoint (1/R for a
    circle of radius R, 0 for polygon edges).
    """

    starts: np.ndarray          # (N, 2)
    ends: np.ndarray            # (N, 2)
    midpoints: np.ndarray       # (N, 2)
    lengths: np.ndarray         # (N,)
    normals: np.ndarray         # (N, 2) unit, outward (towards the exterior)
    curvature: np.ndarray       # (N,)
    scatterer_index: np.ndarray  # (N,) int

    n_scatterers: int = field(default=0)

    @property
    def n_panels(self) -> int:
        return len(self.lengths)

    def validate(self) -> None:
        N = self.n_panels
        for name in ("starts", "ends", "midpoints", "normals"):
            arr = getattr(self, name)
            if arr.shape != (N, 2):
                raise ConfigError(f"{name} has shape {arr.shape}, expected ({N}, 2)")
        if np.any(self.lengths <= 0):
            raise ConfigError("non-positive panel length")
        nn = np.linalg.norm(self.normals, axis=1)
        if np.max(np.abs(nn - 1.0)) > 1e-14:
            raise ConfigError("normals are not unit vectors")
        # each scatterer's panels must close
        for s in range(self.n_scatterers):
            sel = self.scatterer_index == s
            gap = np.linalg.norm((self.ends[sel] - self.starts[sel]).sum(axis=0))
            perim = self.lengths[sel].sum()
            if gap > 1e-12 * perim:
                raise ConfigError(f"scatterer {s} boundary does not close (gap {gap:.2e})")


def _circle_panels(center, radius, n_panels):
    """Panel arrays for a circle; no validation (tests use very coarse n)."""
    cx, cy = center
    th = 2.0 * np.pi * np.arange(n_panels + 1) / n_panels
    vx = cx + radius * np.cos(th)
    vy = cy + radius * np.sin(th)
    starts = np.column_stack([vx[:-1], vy[:-1]])
    ends = np.column_stack([vx[1:], vy[1:]])
    mid = 0.5 * (starts + ends)
    tang = ends - starts
    lengths = np.linalg.norm(tang, axis=1)
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    # CCW vertex order puts (ty, -tx) radially outward
    curv = np.full(n_panels, 1.0 / radius)
    return starts, ends, mid, lengths, normals, curv


def mesh_circle(center, radius, n_panels: int) -> BoundaryMesh:
    """Uniform flat-panel mesh of a circle.

    Panel endpoints sit on the circle at uniform angles; collocation
    points are chord midpoints and normals point radially outward.
    """
    if radius <= 0:
        raise ConfigError(f"radius must be positive, got {radius}")
    if n_panels < MIN_CIRCLE_PANELS:
        raise ConfigError(f"n_panels = {n_panels} below minimum {MIN_CIRCLE_PANELS}")
    starts, ends, mid, lengths, normals, curv = _circle_panels(center, radius, n_panels)
    mesh = BoundaryMesh(starts, ends, mid, lengths, normals, curv,
                        np.zeros(n_panels, dtype=int), n_scatterers=1)
    mesh.validate()
    return mesh


def mesh_polyline(vertices: Sequence[tuple[float, float]]) -> BoundaryMesh:
    """One panel per edge of a closed polygon; orientation fixed to CCW."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        raise ConfigError("polyline scatterer needs at least 3 vertices")
    if np.linalg.norm(v[0] - v[-1]) < 1e-15:
        v = v[:-1]
    # signed area decides orientation; normals below assume CCW
    x, y = v[:, 0], v[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if area < 0:
        v = v[::-1]
    starts = v
    ends = np.roll(v, -1, axis=0)
    mid = 0.5 * (starts + ends)
    tang = ends - starts
    lengths = np.linalg.norm(tang, axis=1)
    if np.any(lengths <= 0):
        raise ConfigError("degenerate polyline edge")
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    curv = np.zeros(len(v))
    mesh = BoundaryMesh(starts, ends, mid, lengths, normals, curv,
                        np.zeros(len(v), dtype=int), n_scatterers=1)
    mesh.validate()
    return mesh


def merge_meshes(meshes: Sequence[BoundaryMesh]) -> BoundaryMesh:
    """Concatenate per-scatterer meshes into one boundary mesh."""
    out = BoundaryMesh(
        np.concatenate([m.starts for m in meshes]),
        np.concatenate([m.ends for m in meshes]),
        np.concatenate([m.midpoints for m in meshes]),
        np.concatenate([m.lengths for m in meshes]),
        np.concatenate([m.normals for m in meshes]),
        np.concatenate([m.curvature for m in meshes]),
        np.concatenate([np.full(m.n_panels, i, dtype=int) for i, m in enumerate(meshes)]),
        n_scatterers=len(meshes),
    )
    out.validate()
    return out


def build_scene_mesh(scatterers: Sequence[Scatterer], n_panels: int,
                     waveguide: bool = False) -> BoundaryMesh:
    """Mesh a list of scatterers (n_panels per circle, edges for polylines).

    With ``waveguide=True`` every scatterer must lie strictly inside the
    strip |x1| < 1/2 and scatterers must be pairwise disjoint.
    """
    meshes = []
    for sc in scatterers:
        if isinstance(sc, Circle):
            meshes.append(mesh_circle(sc.center, sc.radius, n_panels))
        elif isinstance(sc, Polyline):
            meshes.append(mesh_polyline(sc.vertices))
        else:
            raise ConfigError(f"unknown scatterer type {type(sc)!r}")
    if waveguide:
        for i, sc in enumerate(scatterers):
            if isinstance(sc, Circle):
                reach = abs(sc.center[0]) + sc.radius
            else:
                reach = max(abs(p[0]) for p in sc.vertices)
            if reach >= STRIP_HALF_WIDTH:
                raise ConfigError(
                    f"scatterer {i} is not strictly inside the strip |x1| < 1/2")
    _check_disjoint(scatterers)
    return merge_meshes(meshes)


def _check_disjoint(scatterers):
    circles = [s for s in scatterers if isinstance(s, Circle)]
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            ci, cj = circles[i], circles[j]
            d = np.hypot(ci.center[0] - cj.center[0], ci.center[1] - cj.center[1])
            if d <= ci.radius + cj.radius:
                raise ConfigError(f"scatterers {i} and {j} are not disjoint")


def dump_mesh_csv(mesh: BoundaryMesh, path) -> None:
    """Write panels as (scatterer_id, x_start, y_start, x_end, y_end, nx, ny)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scatterer_id", "x_start", "y_start", "x_end", "y_end", "nx", "ny"])
        for i in range(mesh.n_panels):
            w.writerow([
                int(mesh.scatterer_index[i]),
                *(f"{v:.17g}" for v in (*mesh.starts[i], *mesh.ends[i], *mesh.normals[i])),
            ])
