"""Geometric objects attached to a cutset, discrete and continuous.

Discrete side: the reachable set r, its cube fattening R, the empirical
measure mu_n and a perimeter bound.  Continuous side: the surface of a
polyhedral competitor set E relative to the domain, and the surface
energies integrating a direction function or a density over it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence, TextIO, Union

import numpy as np

from .capacity import CapacityField
from .errors import GeometryError
from .flow import CutSet, reachable_mask
from .geometry import (
    Box,
    DomainSpec,
    FlatPiece,
    PolyhedralSet,
    VoxelSet,
    intersect_with_union,
    l1_norm,
    subtract_pieces,
)
from .lattice import LatticeGraph

DirectionFunction = Callable[[np.ndarray], float]


# ---------------------------------------------------------------------------
# discrete cut geometry


def _cut_ids(cut: Union[CutSet, Sequence[int], np.ndarray]) -> np.ndarray:
    if isinstance(cut, CutSet):
        return cut.edges
    return np.asarray(cut, dtype=np.int64).ravel()


def reachable_set(cut: Union[CutSet, Sequence[int]], lattice: LatticeGraph, sources: Any) -> np.ndarray:
    """Indices of vertices joined to the sources by a path avoiding the cut."""
    return np.flatnonzero(reachable_mask(lattice, _cut_ids(cut), sources))


def continuous_representation(r: Any, lattice: LatticeGraph) -> VoxelSet:
    """R = r + [-1/(2n), 1/(2n)]^d as a voxel set; ``r`` holds vertex indices or a mask."""
    idx = np.asarray(r)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    return VoxelSet.from_points(lattice.n, lattice.points[idx.astype(np.int64)], d=lattice.d)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Atoms at edge midpoints with weight t(e) / n^(d-1).

    ``centers2`` holds 2 n c(e) as integers so atom locations are exact;
    weight j equals ``numerators[j] / denominator``.
    """

    n: int
    d: int
    centers2: np.ndarray
    numerators: np.ndarray
    denominator: int

    @property
    def centers(self) -> np.ndarray:
        return self.centers2 / (2.0 * self.n)

    @property
    def weights(self) -> list[Fraction]:
        return [Fraction(int(w), self.denominator) for w in self.numerators]

    @property
    def total_mass(self) -> Fraction:
        return Fraction(int(self.numerators.sum()), self.denominator)

    def __len__(self) -> int:
        return len(self.numerators)

    def to_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*[f"c{i}" for i in range(self.d)], "weight"])
        for c2, num in zip(self.centers2, self.numerators):
            w.writerow([*[str(Fraction(int(v), 2 * self.n)) for v in c2], str(Fraction(int(num), self.denominator))])


def empirical_measure(cut: Union[CutSet, Sequence[int]], field: CapacityField) -> EmpiricalMeasure:
    lat = field.lattice
    ids = _cut_ids(cut)
    e = lat.edges[ids]
    centers2 = lat.points[e[:, 0]] + lat.points[e[:, 1]] if len(ids) else np.zeros((0, lat.d), dtype=np.int64)
    return EmpiricalMeasure(lat.n, lat.d, centers2, field.numerators[ids].copy(), field.D * lat.n ** (lat.d - 1))


@dataclass(frozen=True)
class GridFunction:
    """Test function tabulated on the grid (lo + k) / scale, k in the index box of ``values``."""

    scale: int
    lo: tuple[int, ...]
    values: np.ndarray

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        K = X * self.scale
        Ki = np.rint(K).astype(np.int64)
        if np.any(np.abs(K - Ki) > 1e-9):
            raise ValueError("test function undefined off its grid")
        idx = Ki - np.asarray(self.lo)
        shape = np.asarray(self.values.shape)
        if np.any(idx < 0) or np.any(idx >= shape):
            raise ValueError("test function undefined outside its grid")
        return self.values[tuple(idx.T)]

    @classmethod
    def tabulate(cls, g: Callable[[np.ndarray], np.ndarray], scale: int, lo: Sequence[int], hi: Sequence[int]) -> "GridFunction":
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(g(mesh.reshape(-1, len(lo)) / scale), dtype=float).reshape(mesh.shape[:-1])
        return cls(scale, tuple(int(a) for a in lo), vals)


def measure_pairing(mu: EmpiricalMeasure, g: Callable[[np.ndarray], Any]) -> float:
    """mu(g) = sum of w * g(c(e))."""
    if len(mu) == 0:
        return 0.0
    vals = np.asarray(g(mu.centers), dtype=float).reshape(-1)
    if len(vals) != len(mu) or not np.all(np.isfinite(vals)):
        raise ValueError("test function undefined at some atom")
    w = mu.numerators.astype(float) / mu.denominator
    return float(np.dot(w, vals))


@dataclass(frozen=True)
class PerimeterReport:
    bound: Fraction  # card(cut) / n^(d-1)
    voxel_perimeter: Fraction | None  # exact perimeter of R inside a box domain


def _box_of(region: Any) -> Box | None:
    if isinstance(region, Box):
        return region
    if isinstance(region, DomainSpec) and len(region.solid) == 1 and isinstance(region.solid[0], Box):
        return region.solid[0]
    if isinstance(region, PolyhedralSet) and len(region.cells) == 1 and isinstance(region.cells[0], Box):
        return region.cells[0]
    return None


def voxel_perimeter(R: VoxelSet, omega: Box) -> Fraction:
    """(d-1)-measure of the boundary of R inside the open box omega, exactly."""
    n, d = R.n, R.d
    h = Fraction(1, 2 * n)
    total = Fraction(0)
    pts = R.points
    for z in pts:
        for k in range(d):
            for s in (-1, 1):
                w = list(z)
                w[k] += s
                if tuple(w) in pts:
                    continue
                pos = Fraction(z[k], n) + s * h
                if not omega.lo[k] < pos < omega.hi[k]:
                    continue
                area = Fraction(1)
                for i in range(d):
                    if i == k:
                        continue
                    lo = max(omega.lo[i], Fraction(z[i], n) - h)
                    hi = min(omega.hi[i], Fraction(z[i], n) + h)
                    area *= max(hi - lo, Fraction(0))
                total += area
    return total


def discrete_perimeter_bound(cut: Union[CutSet, Sequence[int]], lattice: LatticeGraph, R: VoxelSet | None = None, omega: Any = None) -> PerimeterReport:
    """card(cut)/n^(d-1), with the exact voxel perimeter of R inside omega when omega is a box."""
    bound = Fraction(len(_cut_ids(cut)), lattice.n ** (lattice.d - 1))
    box = _box_of(omega) if omega is not None else None
    per = voxel_perimeter(R, box) if (R is not None and box is not None) else None
    return PerimeterReport(bound, per)


# ---------------------------------------------------------------------------
# continuous cutsets


def _solid_pieces(spec: DomainSpec) -> list[FlatPiece]:
    return spec.boundary_pieces()


def _check_inside(E: PolyhedralSet, spec: DomainSpec) -> None:
    for cell in E.cells:
        if isinstance(cell, Box):
            corners = np.array(np.meshgrid(*[[float(a), float(b)] for a, b in zip(cell.lo, cell.hi)], indexing="ij")).reshape(spec.d, -1).T
        else:
            corners = cell.vertices
        for c in corners:
            if float(spec.linf_distance(c)) > 1e-9:
                raise GeometryError("competitor set must lie in the closure of the domain")


@dataclass(frozen=True, eq=False)
class ContinuousCutset:
    """Polyhedral competitor E and its surface (dE in Omega) + (Gamma1 minus dE) + (dE on Gamma2).

    Each surface piece is labelled "interior", "gamma1" or "gamma2".  The
    optional density maps a piece to a nonnegative scalar.
    """

    E: PolyhedralSet
    spec: DomainSpec
    density: Callable[[FlatPiece], float] | None = None
    surface: tuple[FlatPiece, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.spec.is_polyhedral:
            raise GeometryError("non-polyhedral input: domain has curved parts")
        _check_inside(self.E, self.spec)
        object.__setattr__(self, "surface", tuple(continuous_surface(self.E, self.spec)))

    def with_density(self, f: Union[Callable[[FlatPiece], float], float]) -> "ContinuousCutset":
        return ContinuousCutset(self.E, self.spec, _as_density(f))


def continuous_surface(E: PolyhedralSet, spec: DomainSpec) -> list[FlatPiece]:
    omega_bd = _solid_pieces(spec)
    g1 = spec.gamma_pieces(1)
    g2 = spec.gamma_pieces(2)
    facets = list(E.facets) if not E.is_empty else []
    out: list[FlatPiece] = []
    for p in facets:
        inner = subtract_pieces(p, omega_bd)
        if not inner.is_empty():
            out.append(inner.replace(label="interior"))
        on_sink = intersect_with_union(p, [q for q in g2 if p.same_orientation(q)])
        if not on_sink.is_empty():
            out.append(on_sink.replace(label="gamma2"))
    for g in g1:
        rest = subtract_pieces(g, [p for p in facets if p.same_orientation(g)])
        if not rest.is_empty():
            out.append(rest.replace(label="gamma1"))
    return out


def _as_density(f: Any) -> Callable[[FlatPiece], float]:
    if callable(f):
        return f
    c = float(f)
    return lambda piece: c


def normal_density(nu: DirectionFunction) -> Callable[[FlatPiece], float]:
    """Density f(piece) = nu(normal of the piece)."""
    return lambda piece: float(nu(np.asarray(piece.normal)))


def continuous_capacity(E: ContinuousCutset, nu: DirectionFunction) -> float:
    """Sum over surface pieces of area times nu(normal)."""
    return float(sum(p.measure * float(nu(np.asarray(p.normal))) for p in E.surface))


def l1_surface_energy(E: ContinuousCutset) -> float:
    return continuous_capacity(E, l1_norm)


def capa(E: ContinuousCutset, f: Any = None) -> float:
    """Sum over surface pieces of area times the density f."""
    dens = _as_density(f) if f is not None else E.density
    if dens is None:
        raise ValueError("no density given")
    total = 0.0
    for p in E.surface:
        v = dens(p)
        if v < 0:
            raise ValueError("density must be nonnegative")
        total += p.measure * v
    return float(total)


@dataclass(frozen=True)
class TReport:
    density_ok: bool
    capacity_ok: bool
    capa: float
    capacity_bound: float

    @property
    def ok(self) -> bool:
        return self.density_ok and self.capacity_ok


def check_T_membership(E: ContinuousCutset, nu: DirectionFunction, M: float, tol: float = 1e-9) -> TReport:
    """f <= nu(normal) on every piece and capa(E, f) <= 10 d^2 M |Gamma1|."""
    if E.density is None:
        raise ValueError("cutset carries no density")
    dens_ok = all(E.density(p) <= float(nu(np.asarray(p.normal))) + tol for p in E.surface)
    c = capa(E)
    g1_area = sum(p.measure for p in E.spec.gamma_pieces(1))
    bound = 10 * E.spec.d**2 * float(M) * g1_area
    return TReport(dens_ok, c <= bound + tol, c, bound)


def axis_direction_function(values: Sequence[float]) -> DirectionFunction:
    """Direction function equal to values[k] on +-e_k; elsewhere the l1 interpolation sum |v_k| values[k]."""
    vals = np.asarray(values, dtype=float)
    return lambda v: float(np.abs(np.asarray(v, float)) @ vals)
