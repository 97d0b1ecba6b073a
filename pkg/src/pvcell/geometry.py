"""Construction and measurement of single convex cells by half-space clipping.

A cell starts as an axis-aligned seed cube and is cut down by perpendicular
bisector planes between its generator point and nearby sites. All operations
are pure functions of their inputs; cells are value-like and safe to build
and measure in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernel as _k

ON_PLANE_EPS = _k.ON_PLANE_EPS
UNIT_NORMAL_TOL = 1e-12
# two faces whose planes agree within these tolerances count as one face
FACE_MERGE_ANGLE_TOL = 1e-9
FACE_MERGE_OFFSET_TOL = 1e-9
GEOMETRY_TOL = 1e-9


class DegenerateSiteError(ValueError):
    """A bisector was requested for a zero-length site vector."""


class ContractViolationError(ValueError):
    """An operation precondition does not hold (e.g. generator outside a clip)."""


class CellConstructionError(RuntimeError):
    """Internal failure while building a cell (capacity or consistency)."""


_STATUS_MESSAGES = {
    _k.ERR_VERT_OVERFLOW: "vertex buffer overflow",
    _k.ERR_FACE_OVERFLOW: "face buffer overflow",
    _k.ERR_CYCLE_OVERFLOW: "face cycle overflow",
    _k.ERR_EMPTY: "clip removed the whole cell",
    _k.ERR_EULER: "Euler relation violated",
    _k.ERR_BAD_SITE: "site coincides with the generator",
}


def _raise_status(status):
    raise CellConstructionError(_STATUS_MESSAGES.get(status, f"kernel status {status}"))


@dataclass(frozen=True)
class HalfSpace:
    """Affine constraint normal . y <= offset with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > UNIT_NORMAL_TOL:
            raise ValueError("half-space normal must have unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, points):
        """normal . y - offset; negative strictly inside."""
        return np.asarray(points, dtype=float) @ self.normal - self.offset

    def complement(self):
        """The closed half-space on the other side of the same plane."""
        return HalfSpace(-self.normal, -self.offset)


@dataclass
class ConvexPolytope:
    """Bounded convex cell as vertices plus outward counterclockwise face cycles."""

    vertices: np.ndarray
    faces: list[list[int]]
    generator: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = [list(map(int, f)) for f in self.faces]
        self.generator = np.asarray(self.generator, dtype=float).reshape(3)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return sum(len(f) for f in self.faces) // 2

    def max_vertex_distance(self):
        """Farthest vertex distance from the generator."""
        return float(np.max(np.linalg.norm(self.vertices - self.generator, axis=1)))


class CellMeasures(NamedTuple):
    volume: float
    surface_area: float
    faces: int
    vertices: int


def bisector(site) -> HalfSpace:
    """Half-space of points at least as close to the origin as to ``site``."""
    s = np.asarray(site, dtype=float).reshape(3)
    d = float(np.linalg.norm(s))
    if d == 0.0:
        raise DegenerateSiteError("site coincides with the origin")
    return HalfSpace(s / d, 0.5 * d)


def axis_aligned_box(lower, upper) -> ConvexPolytope:
    """Box with opposite corners ``lower`` and ``upper``; generator at its center."""
    lo = np.asarray(lower, dtype=float).reshape(3)
    hi = np.asarray(upper, dtype=float).reshape(3)
    if np.any(hi <= lo):
        raise ValueError("upper corner must exceed lower corner in every axis")
    verts, fv, fl = _k.alloc_buffers(8, 6, 4)
    nv, nf = _k.init_cube(1.0, verts, fv, fl)
    unit = (verts[:nv] + 1.0) / 2.0
    return ConvexPolytope(
        vertices=lo + unit * (hi - lo),
        faces=[list(fv[f, : fl[f]]) for f in range(nf)],
        generator=0.5 * (lo + hi),
    )


def initial_cell(radius) -> ConvexPolytope:
    """Seed cube [-radius, radius]^3 centered on the origin."""
    r = float(radius)
    if r <= 0.0:
        raise ValueError("initial cell radius must be positive")
    return axis_aligned_box((-r, -r, -r), (r, r, r))


def _to_flat(cell: ConvexPolytope, extra_verts=64, extra_faces=8):
    # a new cut face can carry one vertex per crossed face plus any
    # originals on the plane, so size cycles by the face count as well
    maxfv = max(max(len(f) for f in cell.faces), cell.n_faces) + 8
    maxv = cell.n_vertices + max(extra_verts, cell.n_faces + 8)
    maxf = cell.n_faces + extra_faces
    verts, fv, fl = _k.alloc_buffers(maxv, maxf, maxfv)
    nv = cell.n_vertices
    verts[:nv] = cell.vertices
    for i, f in enumerate(cell.faces):
        fl[i] = len(f)
        fv[i, : len(f)] = f
    return verts, nv, fv, fl, len(cell.faces)


def _from_flat(verts, nv, fv, fl, nf, generator) -> ConvexPolytope:
    return ConvexPolytope(
        vertices=verts[:nv].copy(),
        faces=[list(fv[f, : fl[f]]) for f in range(nf)],
        generator=np.array(generator, dtype=float),
    )


def clip(cell: ConvexPolytope, h: HalfSpace) -> ConvexPolytope:
    """Intersect ``cell`` with ``h``.

    The generator must strictly satisfy the constraint. Vertices within
    ON_PLANE_EPS of the plane are kept on it; a cut face is added exactly
    when the plane removes part of the cell. Returns ``cell`` unchanged
    when nothing is cut.
    """
    if h.signed_distance(cell.generator) >= 0.0:
        raise ContractViolationError("generator does not strictly satisfy the half-space")
    verts, nv, fv, fl, nf = _to_flat(cell)
    out = _k.alloc_buffers(verts.shape[0], fv.shape[0], fv.shape[1])
    nnv, nnf, status = _k.clip(
        verts, nv, fv, fl, nf, out[0], out[1], out[2],
        h.normal[0], h.normal[1], h.normal[2], h.offset, ON_PLANE_EPS,
    )
    if status == _k.CLIP_NO_CUT:
        return cell
    if status < 0:
        _raise_status(status)
    return _from_flat(out[0], nnv, out[1], out[2], nnf, cell.generator)


def _face_planes(cell: ConvexPolytope):
    """Outward unit normal and offset of each face plane (Newell rule)."""
    planes = np.empty((cell.n_faces, 4))
    for i, f in enumerate(cell.faces):
        pts = cell.vertices[f]
        nxt = np.roll(pts, -1, axis=0)
        normal = np.cross(pts, nxt).sum(axis=0)
        normal /= np.linalg.norm(normal)
        planes[i, :3] = normal
        planes[i, 3] = float(np.mean(pts @ normal))
    return planes


def _merged_face_count(cell: ConvexPolytope):
    """Face and vertex counts with coplanar faces merged.

    Faces whose planes agree within the merge tolerances form one
    geometric face; a vertex counts only when it lies on at least three
    distinct face planes. For cells cut by generic bisectors no merging
    ever happens and the raw counts are returned untouched.
    """
    planes = _face_planes(cell)
    nf = cell.n_faces
    group = np.arange(nf)
    for i in range(nf):
        if group[i] != i:
            continue
        for j in range(i + 1, nf):
            if group[j] != j:
                continue
            cos = float(planes[i, :3] @ planes[j, :3])
            if cos >= 1.0 - 0.5 * FACE_MERGE_ANGLE_TOL ** 2 and \
                    abs(planes[i, 3] - planes[j, 3]) <= FACE_MERGE_OFFSET_TOL * (1.0 + abs(planes[i, 3])):
                group[j] = i
    n_groups = int(np.sum(group == np.arange(nf)))
    if n_groups == nf:
        return nf, cell.n_vertices
    incidence = [set() for _ in range(cell.n_vertices)]
    for i, f in enumerate(cell.faces):
        for v in f:
            incidence[v].add(int(group[i]))
    n_verts = sum(1 for s in incidence if len(s) >= 3)
    return n_groups, n_verts


def measure(cell: ConvexPolytope) -> CellMeasures:
    """Volume, surface area and merged face/vertex counts of a valid cell."""
    verts, nv, fv, fl, nf = _to_flat(cell, extra_verts=1, extra_faces=1)
    vol, area = _k.measure(verts, nv, fv, fl, nf,
                           cell.generator[0], cell.generator[1], cell.generator[2])
    faces, vertices = _merged_face_count(cell)
    return CellMeasures(float(vol), float(area), faces, vertices)


def validate_cell(cell: ConvexPolytope, half_spaces: Sequence[HalfSpace] = (),
                  tol: float = GEOMETRY_TOL):
    """Check the structural invariants, raising ContractViolationError.

    Verifies the Euler relation on the raw cycles, planarity and outward
    orientation of every face, containment of every vertex in every
    defining half-space, and that the generator is strictly interior.
    """
    v, e, f = cell.n_vertices, cell.n_edges, cell.n_faces
    if 2 * e != sum(len(fc) for fc in cell.faces):
        raise ContractViolationError("odd total cycle length")
    if v - e + f != 2:
        raise ContractViolationError(f"Euler relation violated: V={v} E={e} F={f}")
    planes = _face_planes(cell)
    for i, fc in enumerate(cell.faces):
        if len(fc) < 3:
            raise ContractViolationError("face cycle shorter than 3")
        normal, off = planes[i, :3], planes[i, 3]
        dev = cell.vertices[fc] @ normal - off
        if np.max(np.abs(dev)) > tol:
            raise ContractViolationError(f"face {i} not planar within {tol}")
        if cell.generator @ normal - off >= -ON_PLANE_EPS:
            raise ContractViolationError("generator not strictly interior")
    for h in half_spaces:
        if np.max(h.signed_distance(cell.vertices)) > tol:
            raise ContractViolationError("vertex violates a defining half-space")
