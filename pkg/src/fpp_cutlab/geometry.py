"""Domain geometry: boxes, convex polytopes, balls, flat surface pieces, voxels.

Boxes carry exact rational bounds, so every L-infinity predicate on them is
evaluated without rounding.  Convex polytopes are half-space systems; their
distances come from small linear programs.  Balls use a closed-form
L-infinity distance.  Surfaces are decomposed into flat pieces living in a
canonical frame of their hyperplane, which makes coplanar clipping a 2D
polygon operation (d=3) or an interval operation (d=2).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Iterable, Sequence, Union

import numpy as np
import shapely
from scipy.optimize import linprog, minimize, minimize_scalar
from scipy.spatial import ConvexHull, QhullError
from shapely.geometry import MultiPoint
from shapely.geometry import box as shapely_box
from shapely.ops import unary_union

from .errors import GeometryError

# Floating comparisons against a lattice spacing treat |a - b| <= TIE_TOL as a tie.
TIE_TOL = 1e-12
PLANE_TOL = 1e-9
NORMAL_TOL = 1e-12

Number = Union[int, float, Fraction]


def as_fraction(x: Any) -> Fraction:
    """Exact rational from int, Fraction, decimal float or a string like '1/3'."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise GeometryError(f"not a number: {x!r}")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise GeometryError(f"non-finite coordinate {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise GeometryError(f"not a number: {x!r}")


def as_point(x: Iterable[Any]) -> tuple[Fraction, ...]:
    return tuple(as_fraction(c) for c in x)


def _is_exact(x: Sequence[Any]) -> bool:
    return all(isinstance(c, (int, Fraction, np.integer)) for c in x)


def unit_ball_volume(k: int) -> float:
    """Lebesgue measure of the Euclidean unit ball in R^k."""
    table = {0: 1.0, 1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0, 4: math.pi**2 / 2.0}
    if k in table:
        return table[k]
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def l1_norm(v: Sequence[float]) -> float:
    return float(np.sum(np.abs(np.asarray(v, dtype=float))))


# ---------------------------------------------------------------------------
# solid components


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box with rational bounds (may be degenerate)."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise GeometryError("box bounds must have equal positive length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise GeometryError(f"empty geometry: box with lo > hi ({self.lo}, {self.hi})")

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[Any]]) -> "Box":
        return cls(tuple(iv[0] for iv in intervals), tuple(iv[1] for iv in intervals))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def degenerate_axes(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.d) if self.lo[i] == self.hi[i])

    def bounds(self) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        return self.lo, self.hi

    def contains(self, x: Sequence[Any]) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, x, self.hi))

    def linf_distance(self, x: Sequence[Any]):
        """Coordinate-wise projection; exact when ``x`` is rational."""
        if _is_exact(x):
            gaps = [max(a - c, c - b, Fraction(0)) for a, c, b in zip(self.lo, as_point(x), self.hi)]
            return max(gaps)
        xf = np.asarray(x, dtype=float)
        lo = np.array([float(a) for a in self.lo])
        hi = np.array([float(b) for b in self.hi])
        return float(np.max(np.maximum(np.maximum(lo - xf, xf - hi), 0.0)))

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        """Mask of integer points z with d_inf(z/n, box) < 1/n, in integer arithmetic."""
        Z = np.asarray(Z, dtype=np.int64)
        mask = np.ones(len(Z), dtype=bool)
        for i in range(self.d):
            lo, hi = self.lo[i], self.hi[i]
            # z/n - hi < 1/n  <=>  z*den < n*num + den
            mask &= Z[:, i] * lo.denominator > n * lo.numerator - lo.denominator
            mask &= Z[:, i] * hi.denominator < n * hi.numerator + hi.denominator
        return mask

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.d
        A = np.vstack([-np.eye(d), np.eye(d)])
        b = np.array([-float(a) for a in self.lo] + [float(c) for c in self.hi])
        return A, b

    def scaled(self, s: Any) -> "Box":
        s = as_fraction(s)
        return Box(tuple(a * s for a in self.lo), tuple(b * s for b in self.hi))

    def volume(self) -> Fraction:
        out = Fraction(1)
        for a, b in zip(self.lo, self.hi):
            out *= b - a
        return out

    def to_json(self) -> dict:
        return {"box": [[str(a), str(b)] for a, b in zip(self.lo, self.hi)]}


@dataclass(frozen=True)
class ConvexPolytope:
    """Bounded convex polytope {y : A y <= b} with rational coefficients."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        A = tuple(as_point(row) for row in self.A)
        b = as_point(self.b)
        if not A or len(A) != len(b):
            raise GeometryError("half-space system needs matching nonempty A and b")
        d = len(A[0])
        if any(len(row) != d for row in A):
            raise GeometryError("ragged half-space matrix")
        if any(all(c == 0 for c in row) for row in A):
            raise GeometryError("zero row in half-space matrix")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        for i in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(d)
                c[i] = sgn
                res = linprog(c, A_ub=self.A_float, b_ub=self.b_float, bounds=[(None, None)] * d, method="highs")
                if res.status == 3:
                    raise GeometryError("polytope is unbounded")
        if len(self.vertices) <= d:
            raise GeometryError("empty geometry: polytope is empty or lower-dimensional")

    @property
    def d(self) -> int:
        return len(self.A[0])

    @cached_property
    def A_float(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.A])

    @cached_property
    def b_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.b])

    @cached_property
    def vertices(self) -> np.ndarray:
        return _enumerate_vertices(self.A_float, self.b_float)

    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        V = self.vertices
        return tuple(V.min(axis=0)), tuple(V.max(axis=0))

    def contains(self, x: Sequence[Any]) -> bool:
        if _is_exact(x):
            p = as_point(x)
            return all(sum(a * c for a, c in zip(row, p)) <= bi for row, bi in zip(self.A, self.b))
        return bool(np.all(self.A_float @ np.asarray(x, float) <= self.b_float + TIE_TOL))

    def linf_distance(self, x: Sequence[Any]) -> float:
        if self.contains(x):
            return 0.0
        return _lp_linf_distance(np.asarray(x, float), self.A_float, self.b_float)

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        X = np.asarray(Z, dtype=float) / n
        slack = X @ self.A_float.T - self.b_float
        inside = np.all(slack <= TIE_TOL, axis=1)
        # a point within L-inf distance 1/n satisfies every a.x <= b + |a|_1/n
        l1 = np.abs(self.A_float).sum(axis=1)
        maybe = np.all(slack < l1 / n + TIE_TOL, axis=1) & ~inside
        out = inside.copy()
        for i in np.flatnonzero(maybe):
            dist = _lp_linf_distance(X[i], self.A_float, self.b_float)
            out[i] = dist < 1.0 / n - TIE_TOL
        return out

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        return self.A_float, self.b_float

    def scaled(self, s: Any) -> "ConvexPolytope":
        s = as_fraction(s)
        return ConvexPolytope(self.A, tuple(bi * s for bi in self.b))

    def volume(self) -> float:
        return float(ConvexHull(self.vertices).volume)

    def to_json(self) -> dict:
        return {"halfspaces": {"A": [[str(c) for c in row] for row in self.A], "b": [str(c) for c in self.b]}}


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball."""

    center: tuple[Fraction, ...]
    radius: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "radius", as_fraction(self.radius))
        if self.radius <= 0:
            raise GeometryError("empty geometry: ball radius must be positive")

    @property
    def d(self) -> int:
        return len(self.center)

    @cached_property
    def center_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.center])

    def bounds(self) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        return tuple(c - self.radius for c in self.center), tuple(c + self.radius for c in self.center)

    def contains(self, x: Sequence[Any]) -> bool:
        if _is_exact(x):
            return sum((c - y) ** 2 for c, y in zip(as_point(x), self.center)) <= self.radius**2
        return float(np.sum((np.asarray(x, float) - self.center_float) ** 2)) <= float(self.radius) ** 2 + TIE_TOL

    def linf_distances(self, X: np.ndarray) -> np.ndarray:
        return _ball_linf_distances(np.atleast_2d(np.asarray(X, float)), self.center_float, float(self.radius))

    def linf_distance(self, x: Sequence[Any]) -> float:
        return float(self.linf_distances(np.asarray(x, float)[None, :])[0])

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        return self.linf_distances(np.asarray(Z, float) / n) < 1.0 / n - TIE_TOL

    def scaled(self, s: Any) -> "Ball":
        s = as_fraction(s)
        return Ball(tuple(c * s for c in self.center), self.radius * s)

    def volume(self) -> float:
        return unit_ball_volume(self.d) * float(self.radius) ** self.d

    def to_json(self) -> dict:
        return {"ball": {"center": [str(c) for c in self.center], "radius": str(self.radius)}}


Component = Union[Box, ConvexPolytope, Ball]


def _ball_linf_distances(X: np.ndarray, c: np.ndarray, r: float) -> np.ndarray:
    """Exact L-inf distance from each row of X to the ball B(c, r).

    Solves sum_i (a_i - t)_+^2 = r^2 for t, piecewise on the sorted |x - c|.
    """
    a = -np.sort(-np.abs(X - c), axis=1)  # descending
    k_max = a.shape[1]
    out = np.zeros(len(X))
    outside = np.sum(a**2, axis=1) > r * r
    if not np.any(outside):
        return out
    a = a[outside]
    S1 = np.cumsum(a, axis=1)
    S2 = np.cumsum(a**2, axis=1)
    k = np.arange(1, k_max + 1)
    disc = S1**2 - k * (S2 - r * r)
    t = (S1 - np.sqrt(np.maximum(disc, 0.0))) / k
    upper = a
    lower = np.hstack([a[:, 1:], np.zeros((len(a), 1))])
    ok = (disc >= -1e-15) & (t >= lower - 1e-13) & (t <= upper + 1e-13)
    idx = np.argmax(ok, axis=1)
    out[outside] = np.maximum(t[np.arange(len(a)), idx], 0.0)
    return out


def _enumerate_vertices(A: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    d = A.shape[1]
    found: list[np.ndarray] = []
    for rows in itertools.combinations(range(len(A)), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ v <= b + tol) and not any(np.allclose(v, w, atol=tol) for w in found):
            found.append(v)
    if not found:
        return np.zeros((0, d))
    return np.array(found)


def _lp_linf_distance(
    x: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    A_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
) -> float:
    d = len(x)
    c = np.zeros(d + 1)
    c[-1] = 1.0
    eye = np.eye(d)
    A_ub = np.vstack(
        [
            np.hstack([A, np.zeros((len(A), 1))]),
            np.hstack([eye, -np.ones((d, 1))]),
            np.hstack([-eye, -np.ones((d, 1))]),
        ]
    )
    b_ub = np.concatenate([b, x, -x])
    kw: dict[str, Any] = {}
    if A_eq is not None:
        kw["A_eq"] = np.hstack([A_eq, np.zeros((len(A_eq), 1))])
        kw["b_eq"] = b_eq
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d + [(0, None)], method="highs", **kw)
    if not res.success:
        raise GeometryError(f"empty geometry: distance LP failed ({res.message})")
    return max(float(res.fun), 0.0)


def _lp_linf_gap(P: tuple, Q: tuple) -> float:
    """L-inf distance between two convex sets given as (A, b, A_eq, b_eq)."""
    A1, b1, E1, f1 = P
    A2, b2, E2, f2 = Q
    d = A1.shape[1]
    nv = 2 * d + 1
    c = np.zeros(nv)
    c[-1] = 1.0
    rows, rhs = [], []
    for i in range(len(A1)):
        rows.append(np.concatenate([A1[i], np.zeros(d), [0.0]]))
        rhs.append(b1[i])
    for i in range(len(A2)):
        rows.append(np.concatenate([np.zeros(d), A2[i], [0.0]]))
        rhs.append(b2[i])
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        rows.append(np.concatenate([e, -e, [-1.0]]))
        rhs.append(0.0)
        rows.append(np.concatenate([-e, e, [-1.0]]))
        rhs.append(0.0)
    eq_rows, eq_rhs = [], []
    for E, f, off in ((E1, f1, 0), (E2, f2, d)):
        if E is None:
            continue
        for i in range(len(E)):
            row = np.zeros(nv)
            row[off : off + d] = E[i]
            eq_rows.append(row)
            eq_rhs.append(f[i])
    kw: dict[str, Any] = {}
    if eq_rows:
        kw = {"A_eq": np.array(eq_rows), "b_eq": np.array(eq_rhs)}
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * (2 * d) + [(0, None)], method="highs", **kw)
    if not res.success:
        raise GeometryError(f"gap LP failed: {res.message}")
    return max(float(res.fun), 0.0)


# ---------------------------------------------------------------------------
# flat surface pieces


def plane_frame(normal: Sequence[float]) -> tuple[np.ndarray, float, np.ndarray]:
    """Canonical (unoriented) normal, orientation sign, and tangent basis."""
    nrm = np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    i = int(np.flatnonzero(np.abs(nrm) > 1e-12)[0])
    sign = 1.0 if nrm[i] > 0 else -1.0
    cn = sign * nrm
    d = len(cn)
    if d == 2:
        basis = np.array([[-cn[1], cn[0]]])
    elif d == 3:
        e = np.zeros(3)
        e[int(np.argmin(np.abs(cn)))] = 1.0
        u = e - (e @ cn) * cn
        u /= np.linalg.norm(u)
        basis = np.array([u, np.cross(cn, u)])
    else:
        raise GeometryError("surface clipping is implemented for d in {2, 3}")
    return cn, sign, basis


@dataclass(frozen=True, eq=False)
class FlatPiece:
    """A flat (d-1)-dimensional region with an oriented unit normal.

    ``shape`` lives in the hyperplane's canonical tangent frame; in d=2 an
    interval [s0, s1] is stored as the strip [s0, s1] x [0, 1] so that area
    equals length.
    """

    normal: tuple[float, ...]
    plane_offset: float  # canonical_normal . y for y on the plane
    shape: Any
    label: str = ""
    data: Any = None

    @classmethod
    def from_vertices(cls, vertices: np.ndarray, normal: Sequence[float], label: str = "", data: Any = None) -> "FlatPiece":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        nrm = np.asarray(normal, dtype=float)
        nrm = nrm / np.linalg.norm(nrm)
        cn, _, basis = plane_frame(nrm)
        local = V @ basis.T
        if V.shape[1] == 2:
            shape = shapely_box(float(local[:, 0].min()), 0.0, float(local[:, 0].max()), 1.0)
        else:
            shape = MultiPoint([tuple(p) for p in local]).convex_hull
        return cls(tuple(float(c) for c in nrm), float(cn @ V[0]), shape, label, data)

    @property
    def d(self) -> int:
        return len(self.normal)

    @property
    def measure(self) -> float:
        return float(self.shape.area)

    @cached_property
    def frame(self) -> tuple[np.ndarray, float, np.ndarray]:
        return plane_frame(self.normal)

    def coplanar(self, other: "FlatPiece") -> bool:
        cn1 = self.frame[0]
        cn2 = other.frame[0]
        return bool(np.allclose(cn1, cn2, atol=PLANE_TOL) and abs(self.plane_offset - other.plane_offset) < PLANE_TOL)

    def same_orientation(self, other: "FlatPiece") -> bool:
        return float(np.dot(self.normal, other.normal)) > 0

    def replace(self, shape: Any = None, label: str | None = None, data: Any = None, normal: Sequence[float] | None = None) -> "FlatPiece":
        nrm = self.normal if normal is None else tuple(float(c) for c in normal)
        return FlatPiece(
            nrm,
            self.plane_offset,
            self.shape if shape is None else shape,
            self.label if label is None else label,
            self.data if data is None else data,
        )

    def centroid(self) -> np.ndarray:
        cn, _, basis = self.frame
        c = self.shape.centroid
        local = np.array([c.x]) if self.d == 2 else np.array([c.x, c.y])
        return cn * self.plane_offset + basis.T @ local

    def is_empty(self, tol: float = 1e-14) -> bool:
        return self.shape.is_empty or self.measure <= tol


def clip_intersection(p: FlatPiece, q: FlatPiece) -> Any:
    if not p.coplanar(q):
        return shapely.Polygon()
    return p.shape.intersection(q.shape)


def subtract_pieces(p: FlatPiece, others: Iterable[FlatPiece]) -> FlatPiece:
    """p minus the union of the coplanar members of ``others``."""
    shapes = [q.shape for q in others if p.coplanar(q)]
    if not shapes:
        return p
    return p.replace(shape=p.shape.difference(unary_union(shapes)))


def intersect_with_union(p: FlatPiece, others: Iterable[FlatPiece]) -> FlatPiece:
    shapes = [q.shape for q in others if p.coplanar(q)]
    if not shapes:
        return p.replace(shape=shapely.Polygon())
    return p.replace(shape=p.shape.intersection(unary_union(shapes)))


# ---------------------------------------------------------------------------
# polyhedral sets


def _box_facets(bx: Box) -> list[FlatPiece]:
    d = bx.d
    if bx.degenerate_axes:
        raise GeometryError("solid box must be full-dimensional")
    lo = [float(a) for a in bx.lo]
    hi = [float(b) for b in bx.hi]
    out = []
    for k in range(d):
        others = [i for i in range(d) if i != k]
        for side, val in ((-1.0, lo[k]), (1.0, hi[k])):
            corners = []
            for choice in itertools.product((0, 1), repeat=d - 1):
                p = [0.0] * d
                p[k] = val
                for i, ch in zip(others, choice):
                    p[i] = hi[i] if ch else lo[i]
                corners.append(p)
            normal = [0.0] * d
            normal[k] = side
            out.append(FlatPiece.from_vertices(np.array(corners), normal))
    return out


def _polytope_facets(P: ConvexPolytope) -> list[FlatPiece]:
    V = P.vertices
    out = []
    for k in range(len(P.A)):
        a = P.A_float[k]
        on = V[np.abs(V @ a - P.b_float[k]) <= 1e-9]
        if len(on) < P.d:
            continue
        piece = FlatPiece.from_vertices(on, a / np.linalg.norm(a), data=k)
        if not piece.is_empty():
            out.append(piece)
    return out


def cell_facets(cell: Union[Box, ConvexPolytope]) -> list[FlatPiece]:
    if isinstance(cell, Box):
        return _box_facets(cell)
    if isinstance(cell, ConvexPolytope):
        return _polytope_facets(cell)
    raise GeometryError(f"non-polyhedral cell: {type(cell).__name__}")


def boundary_pieces(cells: Sequence[Union[Box, ConvexPolytope]]) -> list[FlatPiece]:
    """Boundary of a union of interior-disjoint convex cells.

    Facets shared by two cells (coplanar, opposite normals) cancel.
    """
    per_cell = [cell_facets(c) for c in cells]
    out: list[FlatPiece] = []
    for i, facets in enumerate(per_cell):
        others = [q for j, fs in enumerate(per_cell) if j != i for q in fs]
        for p in facets:
            opposite = [q for q in others if p.coplanar(q) and not p.same_orientation(q)]
            piece = subtract_pieces(p, opposite) if opposite else p
            if not piece.is_empty():
                out.append(piece)
    for p in out:
        if abs(np.linalg.norm(p.normal) - 1.0) > NORMAL_TOL:
            raise GeometryError("facet normal not unit length")
    return out


@dataclass(frozen=True, eq=False)
class PolyhedralSet:
    """Finite union of interior-disjoint convex cells (boxes or polytopes)."""

    cells: tuple[Union[Box, ConvexPolytope], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        for c in self.cells:
            if not isinstance(c, (Box, ConvexPolytope)):
                raise GeometryError(f"non-polyhedral cell: {type(c).__name__}")

    @classmethod
    def box(cls, intervals: Sequence[Sequence[Any]]) -> "PolyhedralSet":
        return cls((Box.from_intervals(intervals),))

    @property
    def is_empty(self) -> bool:
        return not self.cells

    @cached_property
    def facets(self) -> tuple[FlatPiece, ...]:
        return tuple(boundary_pieces(self.cells))

    def contains(self, x: Sequence[Any]) -> bool:
        return any(c.contains(x) for c in self.cells)

    def volume(self):
        vols = [c.volume() for c in self.cells]
        if all(isinstance(v, Fraction) for v in vols):
            return sum(vols, Fraction(0))
        return float(sum(float(v) for v in vols))

    def scaled(self, s: Any) -> "PolyhedralSet":
        return PolyhedralSet(tuple(c.scaled(s) for c in self.cells))


def facet_integral(F: Union[PolyhedralSet, Iterable[FlatPiece]], weight: Callable[[np.ndarray], float]) -> float:
    """Sum over flat pieces of (d-1)-measure times weight(unit normal)."""
    pieces = F.facets if isinstance(F, PolyhedralSet) else F
    return float(sum(p.measure * float(weight(np.asarray(p.normal))) for p in pieces))


# ---------------------------------------------------------------------------
# boundary patches


@dataclass(frozen=True)
class RectPatch:
    """Axis-aligned flat patch: a box degenerate in exactly one axis."""

    box: Box
    normal: tuple[int, ...]

    def __post_init__(self) -> None:
        deg = self.box.degenerate_axes
        if len(deg) != 1:
            raise GeometryError("rect patch must be degenerate in exactly one axis")
        k = deg[0]
        if tuple(abs(c) for c in self.normal) != tuple(1 if i == k else 0 for i in range(self.box.d)):
            raise GeometryError("rect patch normal must be +/- the degenerate axis")

    @property
    def d(self) -> int:
        return self.box.d

    def linf_distance(self, x: Sequence[Any]):
        return self.box.linf_distance(x)

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        return self.box.within_linf(Z, n)

    def convex_constraints(self) -> tuple:
        A, b = self.box.halfspaces()
        return A, b, None, None

    def pieces(self) -> list[FlatPiece]:
        d = self.d
        corners = []
        for choice in itertools.product((0, 1), repeat=d):
            corners.append([float(self.box.hi[i] if ch else self.box.lo[i]) for i, ch in enumerate(choice)])
        return [FlatPiece.from_vertices(np.unique(np.array(corners), axis=0), self.normal)]

    def scaled(self, s: Any) -> "RectPatch":
        return RectPatch(self.box.scaled(s), self.normal)

    def to_json(self) -> dict:
        return {"rect": [[str(a), str(b)] for a, b in zip(self.box.lo, self.box.hi)], "normal": list(self.normal)}


@dataclass(frozen=True)
class FacetPatch:
    """Facet ``index`` of a convex polytope solid."""

    polytope: ConvexPolytope
    index: int

    @property
    def d(self) -> int:
        return self.polytope.d

    @cached_property
    def _eq(self) -> tuple[np.ndarray, np.ndarray]:
        return self.polytope.A_float[[self.index]], self.polytope.b_float[[self.index]]

    def linf_distance(self, x: Sequence[Any]) -> float:
        E, f = self._eq
        return _lp_linf_distance(np.asarray(x, float), self.polytope.A_float, self.polytope.b_float, E, f)

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        X = np.asarray(Z, float) / n
        a = self.polytope.A_float[self.index]
        bk = self.polytope.b_float[self.index]
        near = np.abs(X @ a - bk) < np.abs(a).sum() / n + TIE_TOL
        out = np.zeros(len(X), dtype=bool)
        for i in np.flatnonzero(near):
            out[i] = self.linf_distance(X[i]) < 1.0 / n - TIE_TOL
        return out

    def convex_constraints(self) -> tuple:
        E, f = self._eq
        return self.polytope.A_float, self.polytope.b_float, E, f

    def pieces(self) -> list[FlatPiece]:
        return [p for p in _polytope_facets(self.polytope) if p.data == self.index]

    def scaled(self, s: Any) -> "FacetPatch":
        return FacetPatch(self.polytope.scaled(s), self.index)


@dataclass(frozen=True)
class CapPatch:
    """Spherical cap {y on the sphere : angle(y - c, axis) <= angle} of a ball solid.

    Distances are computed by grid search plus local refinement (absolute
    accuracy about 1e-9, not exact).
    """

    ball: Ball
    axis: tuple[float, ...]
    angle: float

    def __post_init__(self) -> None:
        ax = np.asarray(self.axis, float)
        object.__setattr__(self, "axis", tuple(float(c) for c in ax / np.linalg.norm(ax)))
        if not 0 < self.angle < math.pi:
            raise GeometryError("cap angle must lie in (0, pi)")
        if self.ball.d not in (2, 3):
            raise GeometryError("cap patches are implemented for d in {2, 3}")

    @property
    def d(self) -> int:
        return self.ball.d

    def _point(self, params: np.ndarray) -> np.ndarray:
        c = self.ball.center_float
        r = float(self.ball.radius)
        u = np.asarray(self.axis)
        if self.d == 2:
            phi0 = math.atan2(u[1], u[0])
            phi = phi0 + params[..., 0]
            return c + r * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        _, _, basis = plane_frame(u)
        a, b = params[..., 0], params[..., 1]
        return c + r * (
            np.cos(a)[..., None] * u
            + np.sin(a)[..., None] * (np.cos(b)[..., None] * basis[0] + np.sin(b)[..., None] * basis[1])
        )

    def sample_points(self, k: int = 64) -> np.ndarray:
        if self.d == 2:
            t = np.linspace(-self.angle, self.angle, k)[:, None]
        else:
            a, b = np.meshgrid(np.linspace(0, self.angle, k), np.linspace(0, 2 * math.pi, k, endpoint=False))
            t = np.stack([a.ravel(), b.ravel()], axis=-1)
        return self._point(t)

    def linf_distance(self, x: Sequence[Any]) -> float:
        xf = np.asarray(x, float)

        def f(t: np.ndarray) -> float:
            return float(np.max(np.abs(self._point(np.asarray(t)) - xf)))

        if self.d == 2:
            grid = np.linspace(-self.angle, self.angle, 721)
            vals = np.max(np.abs(self._point(grid[:, None]) - xf), axis=1)
            i = int(np.argmin(vals))
            step = grid[1] - grid[0]
            lo, hi = max(-self.angle, grid[i] - step), min(self.angle, grid[i] + step)
            res = minimize_scalar(lambda t: f(np.array([t])), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            return min(float(vals[i]), float(res.fun))
        pts = self.sample_points(90)
        vals = np.max(np.abs(pts - xf), axis=1)
        i = int(np.argmin(vals))
        a_grid, b_grid = np.meshgrid(np.linspace(0, self.angle, 90), np.linspace(0, 2 * math.pi, 90, endpoint=False))
        t0 = np.array([a_grid.ravel()[i], b_grid.ravel()[i]])
        res = minimize(
            lambda t: f(np.array([min(max(t[0], 0.0), self.angle), t[1]])),
            t0,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-13},
        )
        return min(float(vals[i]), float(res.fun))

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        X = np.asarray(Z, float) / n
        out = np.zeros(len(X), dtype=bool)
        for i, x in enumerate(X):
            out[i] = self.linf_distance(x) < 1.0 / n - TIE_TOL
        return out

    def pieces(self) -> list[FlatPiece]:
        raise GeometryError("non-polyhedral input: spherical cap has no flat decomposition")

    def scaled(self, s: Any) -> "CapPatch":
        return CapPatch(self.ball.scaled(s), self.axis, self.angle)


Patch = Union[RectPatch, FacetPatch, CapPatch]


def patch_gap(p: Patch, q: Patch) -> float:
    """L-inf distance between two patches (positive iff the Euclidean gap is)."""
    if isinstance(p, RectPatch) and isinstance(q, RectPatch):
        gaps = [max(q.box.lo[i] - p.box.hi[i], p.box.lo[i] - q.box.hi[i], Fraction(0)) for i in range(p.d)]
        return float(max(gaps))
    if not isinstance(p, CapPatch) and not isinstance(q, CapPatch):
        return _lp_linf_gap(p.convex_constraints(), q.convex_constraints())
    cap, other = (p, q) if isinstance(p, CapPatch) else (q, p)
    # sampled upper bound on the gap; caps are not polyhedral
    return float(min(other.linf_distance(y) for y in cap.sample_points(48)))


# ---------------------------------------------------------------------------
# domain specification


def _component_from_json(obj: dict, d: int) -> Component:
    if "box" in obj:
        comp: Component = Box.from_intervals(obj["box"])
    elif "halfspaces" in obj:
        hs = obj["halfspaces"]
        comp = ConvexPolytope(tuple(tuple(r) for r in hs["A"]), tuple(hs["b"]))
    elif "ball" in obj:
        comp = Ball(tuple(obj["ball"]["center"]), obj["ball"]["radius"])
    else:
        raise GeometryError(f"unknown solid component {sorted(obj)}")
    if comp.d != d:
        raise GeometryError(f"component dimension {comp.d} != d={d}")
    return comp


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Bounded domain (union of components) with source and sink boundary patches."""

    d: int
    solid: tuple[Component, ...]
    gamma1: tuple[Patch, ...]
    gamma2: tuple[Patch, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "solid", tuple(self.solid))
        object.__setattr__(self, "gamma1", tuple(self.gamma1))
        object.__setattr__(self, "gamma2", tuple(self.gamma2))
        if self.d < 2:
            raise GeometryError("dimension must be at least 2")
        if not self.solid:
            raise GeometryError("empty geometry: no solid components")
        if not self.gamma1 or not self.gamma2:
            raise GeometryError("empty geometry: gamma1 and gamma2 must be nonempty")
        for part in (*self.solid, *self.gamma1, *self.gamma2):
            if part.d != self.d:
                raise GeometryError("dimension mismatch in domain parts")

    # -- construction -----------------------------------------------------

    @classmethod
    def unit_box(cls, d: int = 2, source_axis: int = 0) -> "DomainSpec":
        """[0,1]^d with sources on x_k = 0 and sinks on x_k = 1."""
        return cls.from_json(
            {
                "d": d,
                "solid": [{"box": [[0, 1]] * d}],
                "gamma1": [{"face": f"x{source_axis}-min"}],
                "gamma2": [{"face": f"x{source_axis}-max"}],
            }
        )

    @classmethod
    def from_json(cls, doc: Union[str, dict]) -> "DomainSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            d = int(doc["d"])
            solid = tuple(_component_from_json(c, d) for c in doc["solid"])
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"malformed domain document: {exc}") from exc
        partial = cls.__new__(cls)
        object.__setattr__(partial, "d", d)
        object.__setattr__(partial, "solid", solid)
        g1 = tuple(partial._patch_from_json(p) for p in doc.get("gamma1", []))
        g2 = tuple(partial._patch_from_json(p) for p in doc.get("gamma2", []))
        return cls(d, solid, g1, g2)

    def _patch_from_json(self, obj: dict) -> Patch:
        idx = int(obj.get("solid", 0))
        if "face" in obj:
            comp = self.solid[idx]
            if not isinstance(comp, Box):
                raise GeometryError("'face' patches need a box solid")
            name = obj["face"]
            try:
                axis_s, side = name[1:].split("-")
                k = int(axis_s)
            except ValueError as exc:
                raise GeometryError(f"bad face name {name!r}") from exc
            if side not in ("min", "max") or not 0 <= k < self.d:
                raise GeometryError(f"bad face name {name!r}")
            lo, hi = list(comp.lo), list(comp.hi)
            val = lo[k] if side == "min" else hi[k]
            lo[k] = hi[k] = val
            normal = tuple((-1 if side == "min" else 1) if i == k else 0 for i in range(self.d))
            return RectPatch(Box(tuple(lo), tuple(hi)), normal)
        if "rect" in obj:
            bx = Box.from_intervals(obj["rect"])
            if "normal" in obj:
                normal = tuple(int(c) for c in obj["normal"])
            else:
                normal = self._infer_rect_normal(bx)
            return RectPatch(bx, normal)
        if "facet" in obj:
            comp = self.solid[idx]
            if not isinstance(comp, ConvexPolytope):
                raise GeometryError("'facet' patches need a half-space solid")
            return FacetPatch(comp, int(obj["facet"]))
        if "cap" in obj:
            cap = obj["cap"]
            comp = self.solid[int(cap.get("solid", idx))]
            if not isinstance(comp, Ball):
                raise GeometryError("'cap' patches need a ball solid")
            return CapPatch(comp, tuple(float(c) for c in cap["axis"]), float(cap["angle"]))
        raise GeometryError(f"unknown patch {sorted(obj)}")

    def _infer_rect_normal(self, bx: Box) -> tuple[int, ...]:
        deg = bx.degenerate_axes
        if len(deg) != 1:
            raise GeometryError("rect patch must be degenerate in exactly one axis")
        k = deg[0]
        center = [(a + b) / 2 for a, b in zip(bx.lo, bx.hi)]
        probe = list(center)
        probe[k] += Fraction(1, 10**6)
        inside_plus = any(c.contains(probe) for c in self.solid)
        return tuple((-1 if inside_plus else 1) if i == k else 0 for i in range(self.d))

    def to_json(self) -> dict:
        def patch_json(p: Patch) -> dict:
            if isinstance(p, RectPatch):
                return p.to_json()
            if isinstance(p, FacetPatch):
                return {"facet": p.index, "solid": self.solid.index(p.polytope)}
            return {"cap": {"solid": self.solid.index(p.ball), "axis": list(p.axis), "angle": p.angle}}

        return {
            "d": self.d,
            "solid": [c.to_json() for c in self.solid],
            "gamma1": [patch_json(p) for p in self.gamma1],
            "gamma2": [patch_json(p) for p in self.gamma2],
        }

    # -- queries ----------------------------------------------------------

    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        los, his = zip(*(c.bounds() for c in self.solid))
        lo = tuple(min(float(l[i]) for l in los) for i in range(self.d))
        hi = tuple(max(float(h[i]) for h in his) for i in range(self.d))
        return lo, hi

    def contains(self, x: Sequence[Any]) -> bool:
        return any(c.contains(x) for c in self.solid)

    def linf_distance(self, x: Sequence[Any]):
        return min(c.linf_distance(x) for c in self.solid)

    def within_linf(self, Z: np.ndarray, n: int) -> np.ndarray:
        mask = np.zeros(len(Z), dtype=bool)
        for c in self.solid:
            mask |= c.within_linf(Z, n)
        return mask

    @property
    def is_polyhedral(self) -> bool:
        return all(isinstance(c, (Box, ConvexPolytope)) for c in self.solid) and all(
            not isinstance(p, CapPatch) for p in (*self.gamma1, *self.gamma2)
        )

    @property
    def is_box_only(self) -> bool:
        return all(isinstance(c, Box) for c in self.solid)

    def gap(self) -> float:
        return min(patch_gap(p, q) for p in self.gamma1 for q in self.gamma2)

    def validate(self) -> None:
        if self.gap() <= 0:
            raise GeometryError("gamma1 and gamma2 must be at positive distance")

    def boundary_pieces(self) -> list[FlatPiece]:
        if not self.is_polyhedral:
            raise GeometryError("non-polyhedral input: domain has curved parts")
        return boundary_pieces(self.solid)  # type: ignore[arg-type]

    def gamma_pieces(self, i: int) -> list[FlatPiece]:
        patches = self.gamma1 if i == 1 else self.gamma2
        out = []
        for p in patches:
            out.extend(piece.replace(label=f"gamma{i}") for piece in p.pieces())
        return out

    def scaled(self, s: Any) -> "DomainSpec":
        solid = tuple(c.scaled(s) for c in self.solid)
        mapping = {id(old): new for old, new in zip(self.solid, solid)}

        def sp(p: Patch) -> Patch:
            if isinstance(p, FacetPatch):
                return FacetPatch(mapping[id(p.polytope)], p.index)
            if isinstance(p, CapPatch):
                return CapPatch(mapping[id(p.ball)], p.axis, p.angle)
            return p.scaled(s)

        return DomainSpec(self.d, solid, tuple(sp(p) for p in self.gamma1), tuple(sp(p) for p in self.gamma2))


def linf_distance_to_set(x: Sequence[Any], S: Any):
    """inf over y in S of ||x - y||_inf.

    ``S`` may be a DomainSpec (its solid), a single component or patch, or a
    sequence of them (union).
    """
    if isinstance(S, DomainSpec):
        parts: Sequence[Any] = S.solid
    elif isinstance(S, (list, tuple)):
        parts = S
    else:
        parts = (S,)
    if not parts:
        raise GeometryError("empty geometry")
    return min(p.linf_distance(x) for p in parts)


# ---------------------------------------------------------------------------
# voxel sets


@dataclass(frozen=True)
class VoxelSet:
    """Union of cubes z/n + [-1/(2n), 1/(2n)]^d over integer points z."""

    n: int
    d: int
    points: frozenset

    @classmethod
    def from_points(cls, n: int, points: Any, d: int | None = None) -> "VoxelSet":
        arr = np.asarray(points, dtype=np.int64)
        if arr.size == 0:
            if d is None:
                raise GeometryError("dimension needed for an empty voxel set")
            return cls(n, d, frozenset())
        arr = np.atleast_2d(arr)
        return cls(n, arr.shape[1], frozenset(tuple(int(c) for c in row) for row in arr))

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, z: Any) -> bool:
        return tuple(int(c) for c in z) in self.points

    def contains_point(self, x: Sequence[Any]) -> bool:
        """Membership of a lattice point x = z/n; non-lattice points are rejected."""
        scaled = [as_fraction(c) * self.n for c in x]
        if any(s.denominator != 1 for s in scaled):
            raise GeometryError("point is not on the lattice Z^d/n")
        return tuple(int(s) for s in scaled) in self.points

    def measure(self) -> Fraction:
        return Fraction(len(self.points), self.n**self.d)

    def array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.d), dtype=np.int64)
        return np.array(sorted(self.points), dtype=np.int64)

    def to_rle(self) -> dict:
        """Run-length encoding along the last axis: rows [prefix..., start, length]."""
        runs: list[list[int]] = []
        for z in sorted(self.points):
            if runs and runs[-1][: self.d - 1] == list(z[:-1]) and runs[-1][-2] + runs[-1][-1] == z[-1]:
                runs[-1][-1] += 1
            else:
                runs.append([*z[:-1], z[-1], 1])
        return {"n": self.n, "d": self.d, "runs": runs}

    @classmethod
    def from_rle(cls, doc: dict) -> "VoxelSet":
        pts = set()
        d = int(doc["d"])
        for row in doc["runs"]:
            prefix, start, length = tuple(row[: d - 1]), row[d - 1], row[d]
            pts.update(prefix + (start + k,) for k in range(length))
        return cls(int(doc["n"]), d, frozenset(pts))


def lebesgue_measure(V: VoxelSet) -> Fraction:
    return V.measure()


def symdiff_distance(A: VoxelSet, B: VoxelSet) -> Fraction:
    """Lebesgue measure of the symmetric difference of two voxel sets."""
    if A.n != B.n:
        raise GeometryError(f"scale mismatch: {A.n} != {B.n}")
    if A.d != B.d:
        raise GeometryError(f"dimension mismatch: {A.d} != {B.d}")
    return Fraction(len(A.points ^ B.points), A.n**A.d)


def region_volume(region: Any):
    if isinstance(region, PolyhedralSet):
        return region.volume()
    return region.volume()


def _voxel_overlap_box(V: VoxelSet, bx: Box) -> Fraction:
    n = V.n
    half = Fraction(1, 2 * n)
    total = Fraction(0)
    for z in V.points:
        vol = Fraction(1)
        for i, zi in enumerate(z):
            lo = max(bx.lo[i], Fraction(zi, n) - half)
            hi = min(bx.hi[i], Fraction(zi, n) + half)
            if hi <= lo:
                vol = Fraction(0)
                break
            vol *= hi - lo
        total += vol
    return total


def _voxel_overlap_polytope(V: VoxelSet, P: ConvexPolytope) -> float:
    n, d = V.n, V.d
    h = 0.5 / n
    A, b = P.A_float, P.b_float
    plo, phi = (np.array(t) for t in P.bounds())
    full = (1.0 / n) ** d
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=d))) * h
    total = 0.0
    for z in V.points:
        c = np.asarray(z, float) / n
        if np.any(c + h <= plo) or np.any(c - h >= phi):
            continue
        pts = c + corners
        if np.all(pts @ A.T <= b + 1e-12):
            total += full
            continue
        A2 = np.vstack([A, -np.eye(d), np.eye(d)])
        b2 = np.concatenate([b, -(c - h), c + h])
        verts = _enumerate_vertices(A2, b2)
        if len(verts) > d:
            try:
                total += float(ConvexHull(verts).volume)
            except QhullError:
                pass
    return total


def _voxel_overlap_ball(V: VoxelSet, ball: Ball, resolution: int = 16) -> float:
    n, d = V.n, V.d
    h = 0.5 / n
    c0 = ball.center_float
    r = float(ball.radius)
    full = (1.0 / n) ** d
    offs = (np.arange(resolution) + 0.5) / resolution * 2 * h - h
    sub = np.array(list(itertools.product(offs, repeat=d)))
    total = 0.0
    for z in V.points:
        c = np.asarray(z, float) / n
        near = np.maximum(np.abs(c - c0) - h, 0.0)
        if np.linalg.norm(np.abs(c - c0) + h) <= r:
            total += full
        elif np.linalg.norm(near) >= r:
            continue
        else:
            inside = np.sum((c + sub - c0) ** 2, axis=1) <= r * r
            total += full * float(inside.mean())
    return total


def voxel_overlap(V: VoxelSet, region: Any):
    """Lebesgue measure of V intersected with a box, polytope, ball or polyhedral set.

    Exact (Fraction) for boxes; polytopes use exact clipping in floating point;
    balls use a 16^d midpoint sub-grid on boundary voxels.
    """
    if isinstance(region, PolyhedralSet):
        parts = [voxel_overlap(V, c) for c in region.cells]
        if all(isinstance(p, Fraction) for p in parts):
            return sum(parts, Fraction(0))
        return float(sum(float(p) for p in parts))
    if isinstance(region, Box):
        return _voxel_overlap_box(V, region)
    if isinstance(region, ConvexPolytope):
        return _voxel_overlap_polytope(V, region)
    if isinstance(region, Ball):
        return _voxel_overlap_ball(V, region)
    raise GeometryError(f"unsupported region {type(region).__name__}")


def voxel_region_distance(V: VoxelSet, region: Any):
    """Lebesgue measure of V symmetric-difference region (region cells must be disjoint)."""
    ov = voxel_overlap(V, region)
    vol = region_volume(region) if not isinstance(region, PolyhedralSet) or region.cells else Fraction(0)
    if isinstance(ov, Fraction) and isinstance(vol, Fraction):
        return V.measure() + vol - 2 * ov
    return float(V.measure()) + float(vol) - 2 * float(ov)
