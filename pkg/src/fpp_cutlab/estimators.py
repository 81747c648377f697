"""Monte Carlo campaigns over cylinders, domains and balls.

Every replicate k of a campaign with base seed s draws its field from the
stream ``replicate_stream(s, k)``; the same k is reused across n, so runs at
different scales are coupled.  Reductions work on integer flow numerators,
which keeps results identical whatever the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.stats import beta

from .capacity import CapacityField, CapacityLaw, replicate_stream, sample_field
from .cutgeom import ContinuousCutset, capa, continuous_representation, empirical_measure
from .errors import GeometryError, InvariantViolation
from .flow import FlowNetwork, max_flow, min_cardinality_cut
from .geometry import DomainSpec, as_fraction, unit_ball_volume, voxel_region_distance
from .lattice import (
    CylinderLattice,
    Hyperrectangle,
    LatticeDomain,
    LatticeGraph,
    ball_boundaries,
    build_ball,
    build_cylinder,
    build_lattice,
)

Z95 = 1.959963984540054


# ---------------------------------------------------------------------------
# small statistics helpers


def clopper_pearson(k: int, R: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, R - k + 1))
    hi = 1.0 if k == R else float(beta.ppf(1 - a / 2, k + 1, R - k))
    return lo, hi


def _rate(p: float, scale: float) -> float:
    if p <= 0:
        return math.inf
    return 0.0 if p >= 1 else -math.log(p) / scale


def _map_chunks(fn: Callable, chunks: Sequence[Any], threads: int) -> list:
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def _split(reps: int, threads: int) -> list[range]:
    parts = max(1, min(reps, 4 * max(threads, 1)))
    bounds = np.linspace(0, reps, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class SeriesRow:
    n: int
    mean: float
    std: float
    reps: int
    error: str | None = None


@dataclass(frozen=True)
class ConvergenceSeries:
    rows: tuple[SeriesRow, ...]

    def __post_init__(self) -> None:
        if any(r.reps < 1 and r.error is None for r in self.rows):
            raise ValueError("every scale needs at least one replicate")

    @property
    def ok_rows(self) -> list[SeriesRow]:
        return [r for r in self.rows if r.error is None]

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.ok_rows]

    @property
    def means(self) -> list[float]:
        return [r.mean for r in self.ok_rows]

    @property
    def stds(self) -> list[float]:
        return [r.std for r in self.ok_rows]

    def at(self, n: int) -> SeriesRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)


@dataclass(frozen=True)
class RateEstimate:
    lam: float
    n: int
    reps: int
    hits: int
    area: float
    d: int
    structurally_impossible: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.hits <= self.reps:
            raise ValueError("hits must lie in [0, reps]")

    @property
    def scale(self) -> float:
        return self.area * self.n ** (self.d - 1)

    @property
    def p_hat(self) -> float:
        return 0.0 if self.structurally_impossible else self.hits / self.reps

    @property
    def J_hat(self) -> float:
        return _rate(self.p_hat, self.scale)

    @property
    def p_ci(self) -> tuple[float, float]:
        if self.structurally_impossible:
            return 0.0, 0.0
        return clopper_pearson(self.hits, self.reps)

    @property
    def J_ci(self) -> tuple[float, float]:
        lo, hi = self.p_ci
        return _rate(hi, self.scale), _rate(lo, self.scale)

    def row(self) -> dict[str, Any]:
        plo, phi = self.p_ci
        jlo, jhi = self.J_ci
        return {
            "n": self.n,
            "lambda": self.lam,
            "reps": self.reps,
            "hits": self.hits,
            "p_hat": self.p_hat,
            "p_lo": plo,
            "p_hi": phi,
            "J_hat": self.J_hat,
            "J_lo": jlo,
            "J_hi": jhi,
            "impossible": int(self.structurally_impossible),
        }


@dataclass
class CylinderSamples:
    """Per-replicate flow numerators on one cylinder."""

    n: int
    taus: np.ndarray
    D: int
    area: float
    d: int
    mincard: int

    @property
    def normalized(self) -> np.ndarray:
        return self.taus / (self.D * self.area * self.n ** (self.d - 1))


@dataclass
class FlowConstantResult:
    series: ConvergenceSeries
    nu_hat: float
    nu_ci: tuple[float, float]
    samples: dict[int, CylinderSamples]

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for r in self.series.rows:
            s = self.samples.get(r.n)
            out.append(
                {
                    "n": r.n,
                    "reps": r.reps,
                    "mean": r.mean,
                    "std": r.std,
                    "mincard": s.mincard if s else "",
                    "tau_min": Fraction(int(s.taus.min()), s.D) if s is not None else "",
                    "tau_max": Fraction(int(s.taus.max()), s.D) if s is not None else "",
                    "error": r.error or "",
                }
            )
        return out


# ---------------------------------------------------------------------------
# cylinders


def _tau_chunk(args: tuple) -> np.ndarray:
    cyl, law, seed, ks = args
    net = FlowNetwork(cyl, cyl.top, cyl.bottom)
    return np.array([net.value(sample_field(cyl, law, replicate_stream(seed, k)).numerators) for k in ks], dtype=np.int64)


def cylinder_samples(cyl: CylinderLattice, law: CapacityLaw, reps: int, seed: int, threads: int = 1, *, check_floor: bool = True) -> CylinderSamples:
    """tau_n for replicates 0..reps-1, with the exact floor tau >= delta_G * mincard checked on each."""
    if len(cyl.top) == 0 or len(cyl.bottom) == 0:
        raise GeometryError(f"cylinder too thin at n={cyl.n}: empty top or bottom boundary")
    chunks = [(cyl, law, seed, ks) for ks in _split(reps, threads)]
    taus = np.concatenate(_map_chunks(_tau_chunk, chunks, threads))
    mc = min_cardinality_cut(cyl, cyl.top, cyl.bottom)
    if check_floor:
        floor = int(law.delta_G * law.D) * mc
        bad = np.flatnonzero(taus < floor)
        if len(bad):
            raise InvariantViolation(f"structural floor broken at n={cyl.n}, replicate {int(bad[0])}: tau < delta_G * mincard")
    return CylinderSamples(cyl.n, taus, law.D, cyl.cross_section(), cyl.d, mc)


def estimate_flow_constant(
    law: CapacityLaw,
    v: Sequence[float],
    A: Hyperrectangle,
    h: float,
    n_list: Sequence[int],
    reps: int,
    seed: int,
    threads: int = 1,
) -> FlowConstantResult:
    """Normalized cylinder flows tau_n / (|A| n^(d-1)) per n; the estimate is the mean at the largest n."""
    if not n_list:
        raise ValueError("n_list must be nonempty")
    rows: list[SeriesRow] = []
    samples: dict[int, CylinderSamples] = {}
    for n in n_list:
        try:
            cyl = build_cylinder(A, h, v, n)
            s = cylinder_samples(cyl, law, reps, seed, threads)
        except GeometryError as exc:
            rows.append(SeriesRow(n, math.nan, math.nan, 0, str(exc)))
            continue
        x = s.normalized
        rows.append(SeriesRow(n, float(x.mean()), float(x.std(ddof=1)) if reps > 1 else 0.0, reps))
        samples[n] = s
    series = ConvergenceSeries(tuple(rows))
    ok = series.ok_rows
    if not ok:
        return FlowConstantResult(series, math.nan, (math.nan, math.nan), samples)
    last = ok[-1]
    half = Z95 * last.std / math.sqrt(last.reps)
    return FlowConstantResult(series, last.mean, (last.mean - half, last.mean + half), samples)


def rate_curve_from_samples(samples: CylinderSamples, law: CapacityLaw, lam_grid: Sequence[float]) -> list[RateEstimate]:
    """Coupled counting: one replicate set, thresholds tau <= lam |A| n^(d-1)."""
    lams = [float(x) for x in lam_grid]
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be sorted ascending")
    scale = as_fraction(samples.area) * samples.n ** (samples.d - 1)
    floor = law.delta_G * samples.mincard
    taus = np.sort(samples.taus)
    reps = len(taus)
    out = []
    for lam in lams:
        level = as_fraction(lam) * scale
        if level < floor:
            out.append(RateEstimate(lam, samples.n, reps, 0, samples.area, samples.d, True))
            continue
        cutoff = math.floor(level * samples.D)
        hits = int(np.searchsorted(taus, cutoff, side="right"))
        out.append(RateEstimate(lam, samples.n, reps, hits, samples.area, samples.d))
    assert_monotone_rate(out)
    return out


def assert_monotone_rate(curve: Sequence[RateEstimate]) -> None:
    for a, b in zip(curve, curve[1:]):
        if b.hits < a.hits or b.J_hat > a.J_hat:
            raise InvariantViolation("coupled rate estimate is not monotone in lambda")


def estimate_lower_tail_rate(
    law: CapacityLaw,
    v: Sequence[float],
    A: Hyperrectangle,
    h: float,
    n: int,
    lam_grid: Sequence[float],
    reps: int,
    seed: int,
    threads: int = 1,
    samples: CylinderSamples | None = None,
) -> list[RateEstimate]:
    lams = [float(x) for x in lam_grid]
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be sorted ascending")
    cyl = build_cylinder(A, h, v, n)
    if samples is None:
        mc = min_cardinality_cut(cyl, cyl.top, cyl.bottom)
        scale = as_fraction(cyl.cross_section()) * n ** (cyl.d - 1)
        if all(as_fraction(lam) * scale < law.delta_G * mc for lam in lams):
            return [RateEstimate(lam, n, reps, 0, cyl.cross_section(), cyl.d, True) for lam in lams]
        samples = cylinder_samples(cyl, law, reps, seed, threads)
    return rate_curve_from_samples(samples, law, lams)


# ---------------------------------------------------------------------------
# domains


@dataclass
class DomainFlowResult:
    series: ConvergenceSeries
    phis: dict[int, np.ndarray]  # flow numerators per replicate
    cards: dict[int, np.ndarray]  # card of the canonical minimal cutset
    distances: dict[int, np.ndarray]  # (reps, panel) symmetric-difference measures
    D: int
    d: int

    def zhang(self, n: int) -> np.ndarray:
        return self.cards[n] / float(n ** (self.d - 1))

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for r in self.series.rows:
            row: dict[str, Any] = {"n": r.n, "reps": r.reps, "mean": r.mean, "std": r.std}
            if r.n in self.cards:
                z = self.zhang(r.n)
                row.update({"zhang_q50": float(np.quantile(z, 0.5)), "zhang_max": float(z.max())})
                dist = self.distances[r.n]
                for j in range(dist.shape[1]):
                    row[f"dist{j}_q50"] = float(np.quantile(dist[:, j], 0.5))
            out.append(row)
        return out


def _domain_chunk(args: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lat, law, seed, ks, panel, corrupt = args
    net = FlowNetwork(lat, lat.sources, lat.sinks)
    phis, cards, dists = [], [], []
    for k in ks:
        fld = sample_field(lat, law, replicate_stream(seed, k))
        res = net.solve(fld)
        cut = res.cut
        if corrupt:
            fld = fld.with_numerators(fld.numerators + 1)
        if cut.recompute(fld) != res.value:
            raise InvariantViolation(f"duality failure at n={lat.n}, replicate {k}")
        mu = empirical_measure(cut, fld)
        if mu.total_mass * lat.n ** (lat.d - 1) != Fraction(res.value, fld.D):
            raise InvariantViolation("empirical mass identity failed")
        R = continuous_representation(res.reachable, lat)
        phis.append(res.value)
        cards.append(len(cut))
        dists.append([float(voxel_region_distance(R, F)) for F in panel])
    return np.array(phis, dtype=np.int64), np.array(cards, dtype=np.int64), np.array(dists, dtype=float).reshape(len(ks), len(panel))


def estimate_domain_flow(
    spec: DomainSpec,
    law: CapacityLaw,
    n_list: Sequence[int],
    reps: int,
    seed: int,
    panel: Sequence[Any] = (),
    threads: int = 1,
    *,
    corrupt: bool = False,
) -> DomainFlowResult:
    """phi_n / n^(d-1) per n, with Zhang statistics and distances of R(E_min) to a competitor panel."""
    if not n_list:
        raise ValueError("n_list must be nonempty")
    rows, phis, cards, dists = [], {}, {}, {}
    d = spec.d
    for n in n_list:
        lat = build_lattice(spec, n)
        chunks = [(lat, law, seed, ks, tuple(panel), corrupt) for ks in _split(reps, threads)]
        parts = _map_chunks(_domain_chunk, chunks, threads)
        ph = np.concatenate([p[0] for p in parts])
        phis[n] = ph
        cards[n] = np.concatenate([p[1] for p in parts])
        dists[n] = np.concatenate([p[2] for p in parts], axis=0)
        x = ph / (law.D * n ** (d - 1))
        rows.append(SeriesRow(n, float(x.mean()), float(x.std(ddof=1)) if reps > 1 else 0.0, reps))
    return DomainFlowResult(ConvergenceSeries(tuple(rows)), phis, cards, dists, law.D, d)


# ---------------------------------------------------------------------------
# ball events


@dataclass(frozen=True)
class BallEvent:
    state: bool | None  # None means undecided
    capacity: Fraction | None
    threshold: float
    witness: np.ndarray  # host edge ids of the witness cutset, or host vertex ids of U
    diagnostic: str = ""


def _ball_threshold(zeta: float, r: float, n: int, d: int) -> float:
    return zeta * unit_ball_volume(d - 1) * r ** (d - 1) * n ** (d - 1)


def _split_terminals(points: np.ndarray, n: int, x: np.ndarray, r: float, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper/lower boundary masks with shared vertices assigned by the sign of (y - x).v."""
    upper, lower = ball_boundaries(points, n, x, r, v)
    side = (points / float(n) - x) @ v
    both = upper & lower
    upper = upper & ~(both & (side < -1e-12))
    lower = lower & ~(both & (side >= -1e-12))
    return upper, lower, side


def _in_ball(lat: LatticeGraph, x: np.ndarray, r: float) -> np.ndarray:
    Y = lat.positions() - x
    return np.sum(Y * Y, axis=1) <= r * r + 1e-12


def detect_Gbar_event(x: Sequence[float], r: float, v: Sequence[float], delta: float, zeta: float, lattice: LatticeGraph, field: CapacityField) -> BallEvent:
    """Is there a cutset inside the slab |(y - x).v| <= 2 delta r of B(x, r) cap Omega_n, separating
    the upper boundary (plus Gamma_n vertices off the lower boundary) from the lower boundary,
    with capacity at most zeta alpha_{d-1} r^{d-1} n^{d-1}?  Decided exactly by a slab-restricted min cut."""
    xc, vv = np.asarray(x, float), np.asarray(v, float)
    n, d = lattice.n, lattice.d
    thr = _ball_threshold(zeta, r, n, d)
    sub, vids, eids = lattice.subgraph(_in_ball(lattice, xc, r))
    empty = np.zeros(0, dtype=np.int64)
    if sub.num_vertices == 0:
        return BallEvent(False, None, thr, empty, "ball contains no lattice vertex")
    upper, lower, side = _split_terminals(sub.points, n, xc, r, vv)
    gamma = np.zeros(sub.num_vertices, dtype=bool)
    if isinstance(lattice, LatticeDomain):
        host_gamma = np.zeros(lattice.num_vertices, dtype=bool)
        host_gamma[lattice.gamma1] = True
        host_gamma[lattice.gamma2] = True
        gamma = host_gamma[vids]
    src = upper | (gamma & ~lower)
    snk = lower
    if not src.any() or not snk.any():
        return BallEvent(False, None, thr, empty, "empty upper or lower boundary")
    y0 = side[sub.edges[:, 0]]
    y1 = side[sub.edges[:, 1]]
    in_slab = (np.abs(y0) <= 2 * delta * r + 1e-12) & (np.abs(y1) <= 2 * delta * r + 1e-12)
    if not in_slab.any():
        return BallEvent(False, None, thr, empty, "empty slab subgraph")
    caps = field.numerators[eids].copy()
    big = int(caps.sum()) + 1
    caps[~in_slab] = big
    res = max_flow(sub, caps, src, snk)
    if res.value >= big:
        return BallEvent(False, None, thr, empty, "no cutset inside the slab")
    cap = Fraction(res.value, field.D)
    witness = eids[res.cut.edges]
    return BallEvent(bool(cap <= thr * (1 + 1e-12)), cap, thr, witness)


def _ball_host_edges(ball: LatticeGraph, host: LatticeGraph) -> tuple[np.ndarray, np.ndarray]:
    vids = host.index_of(ball.points)
    if np.any(vids < 0):
        raise GeometryError("ball leaves the sampled lattice")
    V = host.num_vertices
    hkeys = host.edges[:, 0] * V + host.edges[:, 1]
    order = np.argsort(hkeys)
    a, b = vids[ball.edges[:, 0]], vids[ball.edges[:, 1]]
    keys = np.minimum(a, b) * V + np.maximum(a, b)
    pos = np.searchsorted(hkeys[order], keys)
    pos = np.minimum(pos, len(order) - 1)
    if len(keys) and not np.array_equal(hkeys[order][pos], keys):
        raise GeometryError("ball edge missing from the sampled lattice")
    return vids, order[pos]


def _line_lower_bound(ball: LatticeGraph, side: np.ndarray, caps: np.ndarray, v: np.ndarray, budget: float) -> int:
    """Lower bound on V(boundary of U in B) over all U with card(U sym-diff B^-) <= budget.

    Each lattice line along the dominant axis of v meeting both half balls
    either carries a boundary edge (cost >= its cheapest edge) or adds
    min(#lower, #upper) to the symmetric difference.  Lines are disjoint, so
    a fractional knapsack over skipped lines bounds the total from below.
    """
    k = int(np.argmax(np.abs(v)))
    others = [i for i in range(ball.d) if i != k]
    P = ball.points
    line_edges = ball.axes == k
    keys = [tuple(row) for row in P[:, others]]
    groups: dict[tuple, list[int]] = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    edge_line: dict[tuple, list[int]] = {}
    for j in np.flatnonzero(line_edges):
        edge_line.setdefault(keys[ball.edges[j, 0]], []).append(int(j))
    items = []
    for key, vs in groups.items():
        s = side[vs]
        a, b = int(np.sum(s < -1e-12)), int(np.sum(s >= -1e-12))
        es = edge_line.get(key, [])
        if a and b and es:
            items.append((int(caps[es].min()), min(a, b)))
    total = sum(c for c, _ in items)
    saved = 0.0
    room = float(budget)
    for c, w in sorted(items, key=lambda t: -t[0] / t[1]):
        if room <= 0:
            break
        take = min(1.0, room / w)
        saved += take * c
        room -= take * w
    return math.ceil(total - saved - 1e-9)


def detect_G_event(x: Sequence[float], r: float, v: Sequence[float], delta: float, zeta: float, lattice: LatticeGraph, field: CapacityField) -> BallEvent:
    """Tri-state test for: some U in B(x, r) has card(U sym-diff B^-) <= 4 delta alpha_d r^d n^d and
    V(boundary of U inside B) <= zeta alpha_{d-1} r^{d-1} n^{d-1}."""
    xc, vv = np.asarray(x, float), np.asarray(v, float)
    n, d = lattice.n, lattice.d
    thr = _ball_threshold(zeta, r, n, d)
    budget = 4 * delta * unit_ball_volume(d) * r**d * n**d
    ball = build_ball(xc, r, vv, n)
    if ball.num_vertices == 0:
        return BallEvent(None, None, thr, np.zeros(0, dtype=np.int64), "ball contains no lattice vertex")
    vids, heids = _ball_host_edges(ball, lattice)
    caps = field.numerators[heids]
    upper, lower, side = _split_terminals(ball.points, n, xc, r, vv)
    lower_half = side < -1e-12
    if lower.any() and upper.any():
        res = max_flow(ball, caps, lower, upper)
        U = res.reachable
        sym = int(np.sum(U != lower_half))
        cap = Fraction(res.value, field.D)
        if sym <= budget + 1e-9 and cap <= thr * (1 + 1e-12):
            return BallEvent(True, cap, thr, vids[U], "min-cut witness")
    else:
        cap = None
    lb = _line_lower_bound(ball, side, caps, vv, budget)
    if Fraction(lb, field.D) > thr * (1 + 1e-12):
        return BallEvent(False, cap, thr, np.zeros(0, dtype=np.int64), f"line bound {Fraction(lb, field.D)} exceeds threshold")
    return BallEvent(None, cap, thr, np.zeros(0, dtype=np.int64), "undecided")


# ---------------------------------------------------------------------------
# rate function diagnostics


@dataclass(frozen=True)
class TriangleReport:
    checked: int
    violations: tuple[tuple[float, float, float, float], ...]  # (lambda, mu, lhs, rhs)

    @property
    def ok(self) -> bool:
        return not self.violations


def _unit(v: Sequence[float]) -> np.ndarray:
    a = np.asarray(v, float)
    return a / np.linalg.norm(a)


def triangle_normals(A: Sequence[float], B: Sequence[float], C: Sequence[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exterior unit normals to [BC], [AC], [AB] of a planar triangle (d = 2)."""
    P = [np.asarray(p, float) for p in (A, B, C)]
    area2 = (P[1][0] - P[0][0]) * (P[2][1] - P[0][1]) - (P[1][1] - P[0][1]) * (P[2][0] - P[0][0])
    if abs(area2) < 1e-12:
        raise GeometryError("degenerate triangle")
    out = []
    for i in range(3):
        p, q = P[(i + 1) % 3], P[(i + 2) % 3]
        t = q - p
        nrm = _unit([t[1], -t[0]])
        if nrm @ (P[i] - p) > 0:
            nrm = -nrm
        out.append(nrm)
    return out[0], out[1], out[2]


def check_weak_triangle(
    curves: Mapping[str, Sequence[RateEstimate]],
    A: Sequence[float],
    B: Sequence[float],
    C: Sequence[float],
    directions: Mapping[str, Sequence[float]] | None = None,
    slack: float = 0.0,
) -> TriangleReport:
    """|BC| J_A((lam |AC| + mu |AB|) / |BC|) <= |AC| J_B(lam) + |AB| J_C(mu) on the grids.

    The left side uses the lower confidence bound of J_A at the nearest grid
    point above the argument (J is nonincreasing below the flow constant); the
    right side uses upper confidence bounds.  Pairs with an infinite right side
    are skipped.
    """
    P = [np.asarray(p, float) for p in (A, B, C)]
    if directions is not None:
        ds = [_unit(directions[k]) for k in "ABC"]
        if np.allclose(ds[0], ds[1]) and np.allclose(ds[1], ds[2]):
            raise GeometryError("degenerate triangle: all three directions coincide")
    if len(P[0]) == 2:
        triangle_normals(*P)  # rejects collinear vertices
    bc = float(np.linalg.norm(P[2] - P[1]))
    ac = float(np.linalg.norm(P[2] - P[0]))
    ab = float(np.linalg.norm(P[1] - P[0]))
    if min(bc, ac, ab) <= 0:
        raise GeometryError("degenerate triangle")
    cA = sorted(curves["A"], key=lambda e: e.lam)
    lamsA = np.array([e.lam for e in cA])
    checked = 0
    bad = []
    for eb in curves["B"]:
        jb = eb.J_ci[1]
        if not math.isfinite(jb):
            continue
        for ec in curves["C"]:
            jc = ec.J_ci[1]
            if not math.isfinite(jc):
                continue
            arg = (eb.lam * ac + ec.lam * ab) / bc
            i = int(np.searchsorted(lamsA, arg - 1e-12, side="left"))
            ja = cA[i].J_ci[0] if i < len(cA) else 0.0
            lhs = bc * ja
            rhs = ac * jb + ab * jc + slack
            checked += 1
            if lhs > rhs:
                bad.append((eb.lam, ec.lam, lhs, rhs))
    return TriangleReport(checked, tuple(bad))


@dataclass(frozen=True)
class MinimalityReport:
    capa: float
    rhs: tuple[float, ...]
    violators: tuple[int, ...]

    @property
    def minimal(self) -> bool:
        return not self.violators


def competitor_rhs(E: ContinuousCutset, F: ContinuousCutset, nu: Callable[[np.ndarray], float]) -> float:
    """Integral over F's surface of f where it overlaps E's surface and nu(normal) elsewhere."""
    if E.density is None:
        raise ValueError("cutset carries no density")
    total = 0.0
    for p in F.surface:
        overlap = 0.0
        for q in E.surface:
            if p.coplanar(q):
                a = float(p.shape.intersection(q.shape).area)
                if a > 0:
                    total += a * E.density(q)
                    overlap += a
        total += max(p.measure - overlap, 0.0) * float(nu(np.asarray(p.normal)))
    return total


def check_minimality_panel(E: ContinuousCutset, panel: Sequence[ContinuousCutset], nu: Callable[[np.ndarray], float], tol: float = 1e-9) -> MinimalityReport:
    c = capa(E)
    rhs = tuple(competitor_rhs(E, F, nu) for F in panel)
    viol = tuple(i for i, r in enumerate(rhs) if c > r + tol)
    return MinimalityReport(c, rhs, viol)
