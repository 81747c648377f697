"""Exact maximal flows, canonical minimal cutsets and cutset predicates.

Capacities are integer numerators over a common denominator D, so every
value here is an exact integer.  Multi-terminal problems are reduced to a
single super-source / super-sink pair joined by edges of capacity
sum(capacities) + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import breadth_first_order, connected_components, maximum_flow

from .capacity import CapacityField
from .errors import InvariantViolation, ResourceLimitError
from .lattice import LatticeGraph

INT32_MAX = np.iinfo(np.int32).max
BRUTE_FORCE_LIMIT = 22


def _as_indices(vs: Any, num_vertices: int) -> np.ndarray:
    a = np.asarray(vs)
    if a.dtype == bool:
        if len(a) != num_vertices:
            raise ValueError("vertex mask has the wrong length")
        return np.flatnonzero(a)
    a = np.unique(a.astype(np.int64).ravel())
    if len(a) and (a[0] < 0 or a[-1] >= num_vertices):
        raise ValueError("vertex index out of range")
    return a


def _capacities(lattice: LatticeGraph, field: CapacityField | np.ndarray | Sequence[int]) -> tuple[np.ndarray, int]:
    if isinstance(field, CapacityField):
        caps, D = field.numerators, field.D
    else:
        caps, D = np.asarray(field, dtype=np.int64), 1
    if len(caps) != lattice.num_edges:
        raise ValueError(f"{len(caps)} capacities for {lattice.num_edges} edges")
    if len(caps) and caps.min() < 0:
        raise ValueError("negative capacity")
    return caps, D


@dataclass(frozen=True, eq=False)
class CutSet:
    """Edge set of a host lattice with its exact capacity V = sum t(e) (numerator over D)."""

    edges: np.ndarray
    capacity: int
    D: int
    n: int

    def __post_init__(self) -> None:
        e = np.asarray(self.edges, dtype=np.int64)
        if len(np.unique(e)) != len(e):
            raise ValueError("duplicate edges in cutset")
        e = np.sort(e)
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, edges: Iterable[int], field: CapacityField) -> "CutSet":
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        return cls(e, field.capacity(e), field.D, field.lattice.n)

    @property
    def value(self) -> Fraction:
        return Fraction(self.capacity, self.D)

    def __len__(self) -> int:
        return len(self.edges)

    def recompute(self, field: CapacityField) -> int:
        return field.capacity(self.edges)


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Maximal flow with its canonical minimal cutset.

    ``reachable`` is the vertex mask r* of vertices reachable from the sources
    in the residual graph; ``cut`` is its edge boundary; ``edge_flow[j]`` is the
    signed flow along edge j from its lower to its upper endpoint.
    """

    value: int
    D: int
    cut: CutSet
    reachable: np.ndarray
    edge_flow: np.ndarray

    @property
    def phi(self) -> Fraction:
        return Fraction(self.value, self.D)


class FlowNetwork:
    """Reusable sparse structure for repeated solves on one lattice and terminal pair.

    Builds the CSR layout once; ``solve`` only refills the capacity array,
    which is what replicate loops over fixed cylinders need.
    """

    def __init__(self, lattice: LatticeGraph, sources: Any, sinks: Any) -> None:
        V = lattice.num_vertices
        src = _as_indices(sources, V)
        snk = _as_indices(sinks, V)
        if len(src) == 0 or len(snk) == 0:
            raise ValueError("sources and sinks must be nonempty")
        if np.intersect1d(src, snk).size:
            raise ValueError("sources and sinks intersect")
        self.lattice = lattice
        self.sources = src
        self.sinks = snk
        self.S, self.T = V, V + 1
        eu, ev = lattice.edges[:, 0], lattice.edges[:, 1]
        rows = np.concatenate([eu, ev, np.full(len(src), self.S), snk])
        cols = np.concatenate([ev, eu, src, np.full(len(snk), self.T)])
        key = rows * (V + 2) + cols
        order = np.argsort(key, kind="stable")
        self._order = order
        self._indices = cols[order].astype(np.int32)
        counts = np.bincount(rows, minlength=V + 2)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self._n_super = len(src) + len(snk)
        self._shape = (V + 2, V + 2)

    def _matrix(self, caps: np.ndarray) -> csr_array:
        total = int(caps.sum())
        big = total + 1
        if big > INT32_MAX:
            raise ResourceLimitError("capacities too large for 32-bit flow arithmetic")
        full = np.concatenate([caps, caps, np.full(self._n_super, big, dtype=np.int64)])
        data = full[self._order].astype(np.int32)
        return csr_array((data, self._indices, self._indptr), shape=self._shape)

    def value(self, caps: np.ndarray) -> int:
        """Flow value only; the fast path for replicate loops."""
        return int(maximum_flow(self._matrix(caps), self.S, self.T).flow_value)

    def solve(self, field: CapacityField | np.ndarray, *, check: bool = True) -> FlowResult:
        caps, D = _capacities(self.lattice, field)
        C = self._matrix(caps)
        res = maximum_flow(C, self.S, self.T)
        F = res.flow
        value = int(res.flow_value)
        R = (C - F).tocsr()
        R.data = (R.data > 0).astype(np.int8)
        R.eliminate_zeros()
        order = breadth_first_order(R, self.S, directed=True, return_predecessors=False)
        reach = np.zeros(self.lattice.num_vertices + 2, dtype=bool)
        reach[order] = True
        reach = reach[: self.lattice.num_vertices]
        eu, ev = self.lattice.edges[:, 0], self.lattice.edges[:, 1]
        cut_ids = np.flatnonzero(reach[eu] != reach[ev])
        if len(eu):
            edge_flow = np.asarray(F.tocsr()[eu, ev]).ravel().astype(np.int64)
        else:
            edge_flow = np.zeros(0, dtype=np.int64)
        cut = CutSet(cut_ids, int(caps[cut_ids].sum()), D, self.lattice.n)
        result = FlowResult(value, D, cut, reach, edge_flow)
        if check:
            check_flow(self.lattice, caps, self.sources, self.sinks, result)
        return result


def check_flow(lattice: LatticeGraph, caps: np.ndarray, sources: np.ndarray, sinks: np.ndarray, result: FlowResult) -> None:
    """Raise InvariantViolation unless duality, capacity and conservation all hold exactly."""
    if result.cut.capacity != result.value:
        raise InvariantViolation(f"duality failure: V(cut) = {result.cut.capacity} but flow = {result.value}")
    if np.any(np.abs(result.edge_flow) > caps):
        raise InvariantViolation("edge flow exceeds capacity")
    net = np.zeros(lattice.num_vertices, dtype=np.int64)
    np.add.at(net, lattice.edges[:, 0], -result.edge_flow)
    np.add.at(net, lattice.edges[:, 1], result.edge_flow)
    inner = np.ones(lattice.num_vertices, dtype=bool)
    inner[sources] = False
    inner[sinks] = False
    if np.any(net[inner] != 0):
        raise InvariantViolation("flow conservation fails at an inner vertex")
    if -int(net[sources].sum()) != result.value:
        raise InvariantViolation("net outflow of the sources differs from the flow value")
    if result.reachable[sinks].any() or not result.reachable[sources].all():
        raise InvariantViolation("residual reachable set does not separate the terminals")


def max_flow(lattice: LatticeGraph, field: CapacityField | np.ndarray, sources: Any, sinks: Any, *, check: bool = True) -> FlowResult:
    """Exact maximal flow from ``sources`` to ``sinks``.

    The minimal cutset is the edge boundary of the residual-reachable set of
    the super-source, i.e. the inclusion-minimal minimal cut on the source side.
    It may contain zero-capacity edges.
    """
    V = lattice.num_vertices
    src = _as_indices(sources, V)
    snk = _as_indices(sinks, V)
    if len(src) and len(snk) and np.intersect1d(src, snk).size:
        raise ValueError("sources and sinks intersect")
    if len(src) == 0 or len(snk) == 0:
        caps, D = _capacities(lattice, field)
        reach = np.zeros(V, dtype=bool)
        reach[src] = True
        return FlowResult(0, D, CutSet(np.zeros(0, np.int64), 0, D, lattice.n), reach, np.zeros(lattice.num_edges, np.int64))
    return FlowNetwork(lattice, src, snk).solve(field, check=check)


def min_cardinality_cut(lattice: LatticeGraph, sources: Any, sinks: Any) -> int:
    """Fewest edges in any cutset: unit-capacity maximal flow (edge-disjoint paths)."""
    V = lattice.num_vertices
    src, snk = _as_indices(sources, V), _as_indices(sinks, V)
    if len(src) == 0 or len(snk) == 0:
        return 0
    return FlowNetwork(lattice, src, snk).value(np.ones(lattice.num_edges, dtype=np.int64))


# ---------------------------------------------------------------------------
# predicates


def _component_labels(lattice: LatticeGraph, removed: np.ndarray) -> np.ndarray:
    keep = np.ones(lattice.num_edges, dtype=bool)
    keep[removed] = False
    e = lattice.edges[keep]
    V = lattice.num_vertices
    A = csr_array((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(V, V))
    return connected_components(A, directed=False)[1]


def _edge_ids(edges: Any, lattice: LatticeGraph) -> np.ndarray:
    if isinstance(edges, CutSet):
        return edges.edges
    e = np.asarray(edges)
    if e.dtype == bool:
        return np.flatnonzero(e)
    e = e.astype(np.int64).ravel()
    if len(e) and (e.min() < 0 or e.max() >= lattice.num_edges):
        raise ValueError("edge index out of range")
    return e


def reachable_mask(lattice: LatticeGraph, removed: Any, sources: Any) -> np.ndarray:
    """Vertices joined to ``sources`` by a path avoiding the removed edges."""
    V = lattice.num_vertices
    src = _as_indices(sources, V)
    labels = _component_labels(lattice, _edge_ids(removed, lattice))
    hit = np.zeros(labels.max() + 1 if V else 0, dtype=bool)
    hit[labels[src]] = True
    return hit[labels] if V else np.zeros(0, dtype=bool)


def is_cutset(edges: Any, lattice: LatticeGraph, sources: Any, sinks: Any) -> bool:
    """True iff every path from a source to a sink uses one of ``edges``."""
    V = lattice.num_vertices
    snk = _as_indices(sinks, V)
    return not reachable_mask(lattice, edges, sources)[snk].any()


def is_epsilon_cutset(edges: Any, lattice: LatticeGraph, field: CapacityField, eps: Any, sources: Any, sinks: Any, *, phi: int | None = None) -> bool:
    """V(edges) <= phi + eps * n^(d-1), compared exactly; ``phi`` is a numerator over D."""
    ids = _edge_ids(edges, lattice)
    if not is_cutset(ids, lattice, sources, sinks):
        raise ValueError("edge set is not a cutset")
    if phi is None:
        phi = max_flow(lattice, field, sources, sinks).value
    V_num = field.capacity(ids)
    slack = Fraction(eps) if not isinstance(eps, float) else Fraction(repr(eps))
    return Fraction(V_num - phi, field.D) <= slack * lattice.n ** (lattice.d - 1)


def edge_boundary(U: Any, lattice: LatticeGraph, universe: str = "host") -> np.ndarray:
    """Edges with exactly one endpoint in U.

    ``universe="host"`` returns edge ids of the host lattice.  ``"full"``
    returns an (k, 2, d) array of integer point pairs (x in U, y not in U)
    over all nearest-neighbour edges of Z^d, including those leaving the host.
    """
    V = lattice.num_vertices
    mask = np.zeros(V, dtype=bool)
    mask[_as_indices(U, V)] = True
    if universe == "host":
        eu, ev = lattice.edges[:, 0], lattice.edges[:, 1]
        return np.flatnonzero(mask[eu] != mask[ev])
    if universe != "full":
        raise ValueError("universe must be 'host' or 'full'")
    P = lattice.points[mask]
    pairs = []
    for k in range(lattice.d):
        for s in (-1, 1):
            W = P.copy()
            W[:, k] += s
            idx = lattice.index_of(W)
            out = (idx < 0) | ~mask[np.maximum(idx, 0)]
            pairs.append(np.stack([P[out], W[out]], axis=1))
    if not pairs:
        return np.zeros((0, 2, lattice.d), dtype=np.int64)
    return np.concatenate(pairs, axis=0)


# ---------------------------------------------------------------------------
# brute-force oracle


def _subset_capacities(caps: np.ndarray) -> np.ndarray:
    out = np.zeros(1, dtype=np.int64)
    for c in caps:
        out = np.concatenate([out, out + int(c)])
    return out


def _separates(masks: np.ndarray, edges: np.ndarray, src_bits: int, snk_bits: int, V: int) -> np.ndarray:
    """Vectorized over edge-subset bitmasks: does removing the subset separate the terminals?"""
    reach = np.full(len(masks), src_bits, dtype=np.uint64)
    one = np.uint64(1)
    while True:
        before = reach.copy()
        for j, (u, v) in enumerate(edges):
            open_ = ((masks >> np.uint64(j)) & one) == 0
            bu = (reach >> np.uint64(u)) & one
            bv = (reach >> np.uint64(v)) & one
            reach |= np.where(open_, (bu << np.uint64(v)) | (bv << np.uint64(u)), np.uint64(0))
        if np.array_equal(before, reach):
            break
    return (reach & np.uint64(snk_bits)) == 0


def _lex_smallest(masks: np.ndarray) -> list[int]:
    """Lexicographically smallest sorted edge list among the given bitmasks."""
    cands = np.unique(masks.astype(np.uint64))
    chosen: list[int] = []
    while not np.any(cands == 0):
        low = cands & (~cands + np.uint64(1))
        b = low.min()
        cands = cands[low == b] ^ b
        chosen.append(int(b).bit_length() - 1)
    return chosen


def brute_force_min_cut(lattice: LatticeGraph, field: CapacityField | np.ndarray, sources: Any, sinks: Any) -> CutSet:
    """Exhaustive minimum-capacity cutset, ties broken by the lexicographically smallest sorted edge list."""
    E, V = lattice.num_edges, lattice.num_vertices
    if E > BRUTE_FORCE_LIMIT:
        raise ResourceLimitError(f"brute force limited to {BRUTE_FORCE_LIMIT} edges, got {E}")
    if V > 63:
        raise ResourceLimitError("brute force limited to 63 vertices")
    caps, D = _capacities(lattice, field)
    src, snk = _as_indices(sources, V), _as_indices(sinks, V)
    if np.intersect1d(src, snk).size:
        raise ValueError("sources and sinks intersect")
    src_bits = sum(1 << int(i) for i in src)
    snk_bits = sum(1 << int(i) for i in snk)
    totals = _subset_capacities(caps)
    all_masks = np.arange(1 << E, dtype=np.uint64)
    for level in np.unique(totals):
        masks = all_masks[totals == level]
        ok = _separates(masks, lattice.edges, src_bits, snk_bits, V)
        if ok.any():
            best = _lex_smallest(masks[ok])
            return CutSet(np.array(best, dtype=np.int64), int(level), D, lattice.n)
    raise AssertionError("the full edge set always separates disjoint terminals")
