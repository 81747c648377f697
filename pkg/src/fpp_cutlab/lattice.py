"""Discretized environments on the rescaled lattice Z^d/n.

Vertices are stored as integer points z (position z/n) in lexicographic
order; edges are (lower, upper) vertex-index pairs sorted by lower endpoint,
then axis.  Every structure here is immutable after construction.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateDiscretization, GeometryError, ResourceLimitError
from .geometry import DomainSpec, Patch

# Pure-Python flow on more edges than this is not a desk-scale job.
DEFAULT_EDGE_BUDGET = 500_000
GEOM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LatticeGraph:
    """Finite vertex set of Z^d/n with all nearest-neighbour edges inside it."""

    n: int
    points: np.ndarray  # (V, d) int64, lexicographically sorted
    edges: np.ndarray  # (E, 2) int64 vertex indices, lower endpoint first
    axes: np.ndarray  # (E,) axis of each edge

    @classmethod
    def from_points(cls, n: int, points: np.ndarray, d: int | None = None) -> "LatticeGraph":
        pts = np.asarray(points, dtype=np.int64)
        if pts.size == 0:
            if d is None:
                raise GeometryError("dimension needed for an empty lattice")
            pts = np.zeros((0, d), dtype=np.int64)
        pts = np.unique(np.atleast_2d(pts), axis=0)  # unique sorts rows lexicographically
        edges, axes = _build_edges(pts)
        return cls(n, _frozen(pts), _frozen(edges), _frozen(axes))

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def num_vertices(self) -> int:
        return int(self.points.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def _index(self) -> tuple[np.ndarray, np.ndarray]:
        return _dense_index(self.points)

    def index_of(self, Z: np.ndarray) -> np.ndarray:
        """Vertex index of each integer point, -1 where absent."""
        offset, grid = self._index
        return _lookup(offset, grid, np.atleast_2d(np.asarray(Z, dtype=np.int64)))

    def has_outside_neighbor(self) -> np.ndarray:
        """Mask of vertices with some Z^d neighbour not in the vertex set."""
        out = np.zeros(self.num_vertices, dtype=bool)
        for k in range(self.d):
            for s in (-1, 1):
                shifted = self.points.copy()
                shifted[:, k] += s
                out |= self.index_of(shifted) < 0
        return out

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (indptr, edge ids) of edges incident to each vertex."""
        V = self.num_vertices
        ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        eids = np.concatenate([np.arange(self.num_edges), np.arange(self.num_edges)])
        order = np.argsort(ends, kind="stable")
        indptr = np.zeros(V + 1, dtype=np.int64)
        np.add.at(indptr, ends + 1, 1)
        return _frozen(np.cumsum(indptr)), _frozen(eids[order])

    def midpoints(self) -> np.ndarray:
        """Edge centres c(e) in real coordinates."""
        return (self.points[self.edges[:, 0]] + self.points[self.edges[:, 1]]) / (2.0 * self.n)

    def positions(self) -> np.ndarray:
        return self.points / float(self.n)

    def vertex_mask(self, idx: Sequence[int] | np.ndarray) -> np.ndarray:
        m = np.zeros(self.num_vertices, dtype=bool)
        m[np.asarray(idx, dtype=np.int64)] = True
        return m

    def subgraph(self, keep: np.ndarray) -> tuple["LatticeGraph", np.ndarray, np.ndarray]:
        """Induced subgraph on a vertex mask; returns (graph, vertex ids, edge ids)."""
        keep = np.asarray(keep, dtype=bool)
        vids = np.flatnonzero(keep)
        remap = -np.ones(self.num_vertices, dtype=np.int64)
        remap[vids] = np.arange(len(vids))
        emask = keep[self.edges[:, 0]] & keep[self.edges[:, 1]]
        eids = np.flatnonzero(emask)
        g = LatticeGraph(
            self.n,
            _frozen(self.points[vids]),
            _frozen(remap[self.edges[eids]]),
            _frozen(self.axes[eids]),
        )
        return g, vids, eids

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "vertices": self.points.tolist(),
            "edges": self.edges.tolist(),
        }


def _dense_index(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = points.shape[1]
    if len(points) == 0:
        return np.zeros(d, dtype=np.int64), -np.ones((1,) * d, dtype=np.int64)
    offset = points.min(axis=0)
    shape = tuple(int(s) for s in points.max(axis=0) - offset + 1)
    grid = -np.ones(shape, dtype=np.int64)
    grid[tuple((points - offset).T)] = np.arange(len(points))
    return offset, grid


def _lookup(offset: np.ndarray, grid: np.ndarray, Z: np.ndarray) -> np.ndarray:
    rel = Z - offset
    ok = np.all((rel >= 0) & (rel < np.array(grid.shape)), axis=1)
    out = -np.ones(len(Z), dtype=np.int64)
    if np.any(ok):
        out[ok] = grid[tuple(rel[ok].T)]
    return out


def _build_edges(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = points.shape[1]
    if len(points) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    offset, grid = _dense_index(points)
    us, vs, ks = [], [], []
    for k in range(d):
        shifted = points.copy()
        shifted[:, k] += 1
        nb = _lookup(offset, grid, shifted)
        ok = nb >= 0
        us.append(np.flatnonzero(ok))
        vs.append(nb[ok])
        ks.append(np.full(int(ok.sum()), k))
    u = np.concatenate(us)
    v = np.concatenate(vs)
    ax = np.concatenate(ks)
    order = np.lexsort((ax, u))
    return np.stack([u[order], v[order]], axis=1).astype(np.int64), ax[order].astype(np.int64)


def _candidate_grid(lo: Sequence[float], hi: Sequence[float], n: int, budget: int) -> np.ndarray:
    zlo = [math.floor(n * a) - 1 for a in lo]
    zhi = [math.ceil(n * b) + 1 for b in hi]
    sizes = [b - a + 1 for a, b in zip(zlo, zhi)]
    count = math.prod(sizes)
    if count * len(sizes) > budget:
        raise ResourceLimitError(f"lattice too large for memory budget: ~{count} vertices, ~{count * len(sizes)} edges > {budget}")
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(zlo, zhi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def estimate_size(spec: DomainSpec, n: int) -> tuple[int, int]:
    """Upper bounds (vertices, edges) from the enlarged bounding box."""
    lo, hi = spec.bounds()
    sizes = [math.ceil(n * b) - math.floor(n * a) + 3 for a, b in zip(lo, hi)]
    count = math.prod(sizes)
    return count, count * spec.d


# ---------------------------------------------------------------------------
# domain discretization


@dataclass(frozen=True, eq=False)
class LatticeDomain(LatticeGraph):
    """Omega_n with Pi_n as edge set and the boundary sets Gamma_n, Gamma_n^1, Gamma_n^2."""

    spec: DomainSpec = None  # type: ignore[assignment]
    gamma: np.ndarray = None  # type: ignore[assignment]  # bool mask over vertices
    gamma1: np.ndarray = None  # type: ignore[assignment]  # vertex indices
    gamma2: np.ndarray = None  # type: ignore[assignment]

    @property
    def sources(self) -> np.ndarray:
        return self.gamma1

    @property
    def sinks(self) -> np.ndarray:
        return self.gamma2

    def to_json(self) -> dict:
        doc = super().to_json()
        doc.update(
            gamma=np.flatnonzero(self.gamma).tolist(),
            gamma1=self.gamma1.tolist(),
            gamma2=self.gamma2.tolist(),
        )
        return doc


def _patches_within(patches: Sequence[Patch], Z: np.ndarray, n: int) -> np.ndarray:
    mask = np.zeros(len(Z), dtype=bool)
    for p in patches:
        mask |= p.within_linf(Z, n)
    return mask


def build_lattice(spec: DomainSpec, n: int, *, edge_budget: int = DEFAULT_EDGE_BUDGET, strict: bool = True) -> LatticeDomain:
    """Discretize a domain at scale n.

    Omega_n = {z/n : d_inf(z/n, Omega) < 1/n}; Gamma_n are the vertices with a
    neighbour outside Omega_n; Gamma_n^i are those within d_inf < 1/n of
    Gamma^i and at d_inf >= 1/n from the other patch.
    """
    if int(n) != n or n < 1:
        raise GeometryError(f"scale n must be a positive integer, got {n!r}")
    n = int(n)
    lo, hi = spec.bounds()
    Z = _candidate_grid(lo, hi, n, edge_budget)
    pts = Z[spec.within_linf(Z, n)]
    base = LatticeGraph.from_points(n, pts, d=spec.d)
    gamma = base.has_outside_neighbor()
    P = base.points
    near1 = np.zeros(len(P), dtype=bool)
    near2 = np.zeros(len(P), dtype=bool)
    gidx = np.flatnonzero(gamma)
    near1[gidx] = _patches_within(spec.gamma1, P[gidx], n)
    near2[gidx] = _patches_within(spec.gamma2, P[gidx], n)
    g1 = np.flatnonzero(gamma & near1 & ~near2)
    g2 = np.flatnonzero(gamma & near2 & ~near1)
    if strict:
        if len(g1) == 0:
            raise DegenerateDiscretization(f"degenerate discretization: empty Gamma_n^1 at n={n}")
        if len(g2) == 0:
            raise DegenerateDiscretization(f"degenerate discretization: empty Gamma_n^2 at n={n}")
    return LatticeDomain(
        base.n,
        base.points,
        base.edges,
        base.axes,
        spec=spec,
        gamma=_frozen(gamma),
        gamma1=_frozen(g1),
        gamma2=_frozen(g2),
    )


# ---------------------------------------------------------------------------
# cylinders


@dataclass(frozen=True)
class Hyperrectangle:
    """(d-1)-dimensional rectangle: centre, orthonormal in-plane frame, side lengths."""

    center: tuple[float, ...]
    frame: tuple[tuple[float, ...], ...]
    sides: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "frame", tuple(tuple(float(c) for c in u) for u in self.frame))
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        d = len(self.center)
        if len(self.frame) != d - 1 or len(self.sides) != d - 1:
            raise GeometryError("hyperrectangle needs d-1 frame vectors and side lengths")
        F = np.array(self.frame)
        if not np.allclose(F @ F.T, np.eye(d - 1), atol=GEOM_TOL):
            raise GeometryError("hyperrectangle frame is not orthonormal")
        if any(s <= 0 for s in self.sides):
            raise GeometryError("degenerate hyperrectangle: side lengths must be positive")

    @classmethod
    def axis_face(cls, d: int, normal_axis: int, origin: Sequence[float] | None = None, side: float = 1.0) -> "Hyperrectangle":
        """{x : x_k = origin_k, origin_j <= x_j <= origin_j + side for j != k}."""
        o = np.zeros(d) if origin is None else np.asarray(origin, float)
        others = [j for j in range(d) if j != normal_axis]
        center = o.copy()
        center[others] += side / 2
        frame = [tuple(float(j == i) for j in range(d)) for i in others]
        return cls(tuple(center), tuple(frame), tuple([side] * (d - 1)))

    @classmethod
    def segment(cls, center: Sequence[float], direction: Sequence[float], length: float) -> "Hyperrectangle":
        u = np.asarray(direction, float)
        return cls(tuple(center), (tuple(u / np.linalg.norm(u)),), (length,))

    @property
    def d(self) -> int:
        return len(self.center)

    def measure(self) -> float:
        return float(math.prod(self.sides))

    def to_json(self) -> dict:
        return {"center": list(self.center), "frame": [list(u) for u in self.frame], "sides": list(self.sides)}

    @classmethod
    def from_json(cls, doc: dict) -> "Hyperrectangle":
        return cls(tuple(doc["center"]), tuple(tuple(u) for u in doc["frame"]), tuple(doc["sides"]))


@dataclass(frozen=True, eq=False)
class CylinderLattice(LatticeGraph):
    """Z^d/n intersected with cyl(A, h), with the discrete boundary halves T'(A,h), B'(A,h)."""

    base: Hyperrectangle = None  # type: ignore[assignment]
    height: float = 0.0
    direction: tuple[float, ...] = ()
    top: np.ndarray = None  # type: ignore[assignment]  # T': (z - x).v > 0
    bottom: np.ndarray = None  # type: ignore[assignment]  # B': (z - x).v < 0

    @property
    def sources(self) -> np.ndarray:
        return self.top

    @property
    def sinks(self) -> np.ndarray:
        return self.bottom

    def cross_section(self) -> float:
        return self.base.measure()


def _check_unit(v: Sequence[float]) -> np.ndarray:
    vv = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(vv) - 1.0) > GEOM_TOL:
        raise GeometryError(f"direction {tuple(v)} is not a unit vector")
    return vv


def build_cylinder(A: Hyperrectangle, h: float, v: Sequence[float], n: int, *, edge_budget: int = DEFAULT_EDGE_BUDGET) -> CylinderLattice:
    """Lattice points of cyl(A, h) = {x + t v : x in A, |t| <= h}.

    Membership and the sign of (z - x).v use an absolute tolerance of 1e-9.
    """
    vv = _check_unit(v)
    if not h > 0:
        raise GeometryError("cylinder half-height h must be positive")
    if len(vv) != A.d:
        raise GeometryError("direction and hyperrectangle dimensions differ")
    F = np.array(A.frame)
    if np.any(np.abs(F @ vv) > GEOM_TOL):
        raise GeometryError("direction v is not normal to the hyperrectangle A")
    n = int(n)
    c = np.array(A.center)
    half = np.array(A.sides) / 2
    corners = []
    for signs in np.array(np.meshgrid(*[[-1.0, 1.0]] * A.d, indexing="ij")).reshape(A.d, -1).T:
        corners.append(c + (signs[:-1] * half) @ F + signs[-1] * h * vv)
    corners = np.array(corners)
    Z = _candidate_grid(corners.min(axis=0), corners.max(axis=0), n, edge_budget)
    X = Z / float(n) - c
    inside = np.abs(X @ vv) <= h + GEOM_TOL
    inside &= np.all(np.abs(X @ F.T) <= half + GEOM_TOL, axis=1)
    base = LatticeGraph.from_points(n, Z[inside], d=A.d)
    outside_nb = base.has_outside_neighbor()
    s = (c - base.positions()) @ vv
    top = np.flatnonzero(outside_nb & (s > GEOM_TOL))
    bottom = np.flatnonzero(outside_nb & (s < -GEOM_TOL))
    return CylinderLattice(
        base.n,
        base.points,
        base.edges,
        base.axes,
        base=A,
        height=float(h),
        direction=tuple(float(c) for c in vv),
        top=_frozen(top),
        bottom=_frozen(bottom),
    )


# ---------------------------------------------------------------------------
# balls


def ball_boundaries(points: np.ndarray, n: int, x: Sequence[float], r: float, v: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Masks of the discrete interior upper and lower boundaries of B(x, r).

    A vertex y is upper (lower) when some l1-neighbour z at distance 1/n lies
    outside B(x, r) with (z - x).v >= 0 (< 0).  A vertex can be both.
    """
    P = np.asarray(points, dtype=np.int64)
    xc = np.asarray(x, float)
    vv = np.asarray(v, float)
    upper = np.zeros(len(P), dtype=bool)
    lower = np.zeros(len(P), dtype=bool)
    for k in range(P.shape[1]):
        for s in (-1, 1):
            W = P.copy()
            W[:, k] += s
            Y = W / float(n) - xc
            out = np.sum(Y * Y, axis=1) > r * r + 1e-12
            side = Y @ vv
            upper |= out & (side >= -1e-12)
            lower |= out & (side < -1e-12)
    return upper, lower


@dataclass(frozen=True, eq=False)
class BallRegion(LatticeGraph):
    """B(x, r) intersected with Z^d/n, with its discrete interior upper/lower boundaries."""

    center: tuple[float, ...] = ()
    radius: float = 0.0
    direction: tuple[float, ...] = ()
    upper: np.ndarray = None  # type: ignore[assignment]
    lower: np.ndarray = None  # type: ignore[assignment]
    slab: np.ndarray | None = None  # bool mask of vertices kept by the slab restriction

    def side(self) -> np.ndarray:
        """(y - x).v for each vertex."""
        return (self.positions() - np.array(self.center)) @ np.array(self.direction)


def build_ball(x: Sequence[float], r: float, v: Sequence[float], n: int, slab_halfheight: float | None = None) -> BallRegion:
    vv = _check_unit(v)
    if not r > 0:
        raise GeometryError("ball radius must be positive")
    xc = np.asarray(x, float)
    n = int(n)
    Z = _candidate_grid(xc - r, xc + r, n, DEFAULT_EDGE_BUDGET)
    Y = Z / float(n) - xc
    pts = Z[np.sum(Y * Y, axis=1) <= r * r + 1e-12]
    if len(pts) == 0:
        warnings.warn(f"ball of radius {r} contains no vertex of Z^d/{n}", RuntimeWarning, stacklevel=2)
    base = LatticeGraph.from_points(n, pts, d=len(xc))
    upper, lower = ball_boundaries(base.points, n, xc, r, vv)
    slab = None
    if slab_halfheight is not None:
        slab = np.abs((base.positions() - xc) @ vv) <= slab_halfheight + 1e-12
    return BallRegion(
        base.n,
        base.points,
        base.edges,
        base.axes,
        center=tuple(float(c) for c in xc),
        radius=float(r),
        direction=tuple(float(c) for c in vv),
        upper=_frozen(np.flatnonzero(upper)),
        lower=_frozen(np.flatnonzero(lower)),
        slab=None if slab is None else _frozen(slab),
    )


def dump_lattice(lat: LatticeGraph) -> str:
    return json.dumps(lat.to_json(), sort_keys=True)


def lattice_summary(lat: LatticeDomain) -> dict[str, Any]:
    return {
        "n": lat.n,
        "vertices": lat.num_vertices,
        "edges": lat.num_edges,
        "gamma": int(lat.gamma.sum()),
        "gamma1": int(len(lat.gamma1)),
        "gamma2": int(len(lat.gamma2)),
    }
