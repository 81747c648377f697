"""Capacity laws, reproducible i.i.d. sampling, and fixed-point quantization.

Every support value is an integer multiple of 1/D, so a sampled field is an
integer array of numerators and all flow arithmetic downstream is exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from .errors import LawError
from .geometry import as_fraction
from .lattice import LatticeGraph

# Bond percolation thresholds.  p_c(2) = 1/2 is exact; the rest are numerical
# estimates from the literature and can be overridden.
PC_DEFAULTS: dict[int, float] = {2: 0.5, 3: 0.2488, 4: 0.1601, 5: 0.1182, 6: 0.0942}

SEED_BITS = 64
KEY_LIMIT = 1 << 128


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True)
class CapacityLaw:
    """Finitely supported law on [0, M] with values in (1/D) Z."""

    kind: str
    support: tuple[Fraction, ...]
    probs: tuple[float, ...]
    M: Fraction
    D: int
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs) or not self.support:
            raise LawError("support and probabilities must be nonempty and of equal length")
        if any(p < 0 for p in self.probs):
            raise LawError("negative probability")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise LawError(f"probabilities sum to {sum(self.probs)!r}, not 1")
        if any(v < 0 for v in self.support):
            raise LawError("capacities must be nonnegative")
        if any(v > self.M for v in self.support):
            raise LawError(f"support exceeds the bound M={self.M}")
        if self.D < 1 or any((v * self.D).denominator != 1 for v in self.support):
            raise LawError(f"support values are not multiples of 1/D with D={self.D}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def _build(cls, kind: str, atoms: Sequence[tuple[Any, float]], M: Any = None, D: int | None = None, params: dict | None = None) -> "CapacityLaw":
        merged: dict[Fraction, float] = {}
        for v, p in atoms:
            fv = as_fraction(v)
            merged[fv] = merged.get(fv, 0.0) + float(p)
        items = sorted((v, p) for v, p in merged.items() if p > 0)
        if not items:
            raise LawError("law has no positive-probability atom")
        support = tuple(v for v, _ in items)
        probs = tuple(p for _, p in items)
        bound = as_fraction(M) if M is not None else max(support)
        den = int(D) if D is not None else _lcm(v.denominator for v in support)
        return cls(kind, support, probs, bound, den, dict(params or {}))

    @classmethod
    def deterministic(cls, c: Any, M: Any = None, D: int | None = None) -> "CapacityLaw":
        return cls._build("deterministic", [(c, 1.0)], M, D, {"c": str(as_fraction(c))})

    @classmethod
    def two_point(cls, a: Any, b: Any, p: float, M: Any = None, D: int | None = None) -> "CapacityLaw":
        """P(t = b) = p, P(t = a) = 1 - p."""
        if not 0 <= p <= 1:
            raise LawError("two_point probability must lie in [0, 1]")
        return cls._build("two_point", [(a, 1.0 - p), (b, p)], M, D, {"a": str(as_fraction(a)), "b": str(as_fraction(b)), "p": p})

    @classmethod
    def finite_support(cls, atoms: Sequence[tuple[Any, float]], M: Any = None, D: int | None = None) -> "CapacityLaw":
        return cls._build("finite_support", atoms, M, D, {"atoms": [[str(as_fraction(v)), float(p)] for v, p in atoms]})

    @classmethod
    def uniform_quantized(cls, a: Any, b: Any, steps: int, M: Any = None, D: int | None = None) -> "CapacityLaw":
        """Uniform(a, b) replaced by the midpoints of ``steps`` equal cells, each with mass 1/steps."""
        fa, fb = as_fraction(a), as_fraction(b)
        if not fb > fa or steps < 1:
            raise LawError("uniform_quantized needs a < b and steps >= 1")
        width = (fb - fa) / steps
        atoms = [(fa + (k + Fraction(1, 2)) * width, 1.0 / steps) for k in range(steps)]
        law = cls._build("uniform_quantized", atoms, M if M is not None else fb, D, {"a": str(fa), "b": str(fb), "steps": steps})
        return law

    @classmethod
    def from_json(cls, doc: dict | str) -> "CapacityLaw":
        if isinstance(doc, str):
            doc = json.loads(doc)
        kind = doc.get("kind")
        M, D = doc.get("M"), doc.get("D")
        try:
            if kind == "deterministic":
                return cls.deterministic(doc["c"], M, D)
            if kind == "two_point":
                return cls.two_point(doc["a"], doc["b"], float(doc["p"]), M, D)
            if kind == "finite_support":
                return cls.finite_support([(v, float(p)) for v, p in doc["atoms"]], M, D)
            if kind == "uniform_quantized":
                return cls.uniform_quantized(doc["a"], doc["b"], int(doc["steps"]), M, D)
        except KeyError as exc:
            raise LawError(f"law document missing field {exc}") from exc
        raise LawError(f"unknown law kind {kind!r}")

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"kind": self.kind, **self.params, "M": str(self.M), "D": self.D}
        return doc

    # -- derived quantities -------------------------------------------------

    @property
    def delta_G(self) -> Fraction:
        """inf{t : P(t(e) <= t) > 0}, the least support value."""
        return self.support[0]

    @property
    def atom_at_zero(self) -> float:
        return self.probs[0] if self.support[0] == 0 else 0.0

    @property
    def numerators(self) -> np.ndarray:
        return np.array([int(v * self.D) for v in self.support], dtype=np.int64)

    @property
    def mean(self) -> float:
        return float(sum(float(v) * p for v, p in zip(self.support, self.probs)))

    @property
    def is_dirac(self) -> bool:
        return len(self.support) == 1

    def scaled(self, c: Any) -> "CapacityLaw":
        fc = as_fraction(c)
        if fc <= 0:
            raise LawError("scale factor must be positive")
        atoms = list(zip((v * fc for v in self.support), self.probs))
        return CapacityLaw._build(self.kind, atoms, self.M * fc, None, {**self.params, "scaled_by": str(fc)})


@dataclass(frozen=True)
class LawReport:
    status: str  # "pass" or "warn"
    delta_G: Fraction
    atom_at_zero: float
    p_c: float
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "pass"


def validate_law(law: CapacityLaw, d: int, p_c: float | None = None) -> LawReport:
    """Check boundedness (hard) and G({0}) < 1 - p_c(d) (warning only)."""
    if any(v < 0 or v > law.M for v in law.support):
        raise LawError(f"law not bounded by M={law.M}")
    messages: list[str] = []
    if p_c is None:
        if d not in PC_DEFAULTS:
            raise LawError(f"no default p_c for d={d}; pass p_c explicitly")
        p_c = PC_DEFAULTS[d]
        if d >= 3:
            messages.append(f"p_c({d}) = {p_c} is an external numerical constant")
    status = "pass"
    if not law.atom_at_zero < 1.0 - p_c:
        status = "warn"
        messages.append(
            f"flow constant may be null: G({{0}}) = {law.atom_at_zero} >= 1 - p_c({d}) = {1.0 - p_c}"
        )
    return LawReport(status, law.delta_G, law.atom_at_zero, float(p_c), tuple(messages))


# ---------------------------------------------------------------------------
# sampling


def replicate_stream(seed: int, replicate_index: int) -> int:
    """Derived 128-bit generator key: low 64 bits = seed, high bits = index + 1.

    Injective on seed < 2^64 and 0 <= index < 2^64 - 1, so replicate streams
    are distinct Philox keys and never overlap.
    """
    seed = int(seed)
    k = int(replicate_index)
    if not 0 <= seed < (1 << SEED_BITS):
        raise ValueError("base seed must be an unsigned 64-bit integer")
    if not 0 <= k < (1 << 64) - 1:
        raise ValueError("replicate index out of range")
    return seed | ((k + 1) << SEED_BITS)


def uniform_stream(key: int, size: int) -> np.ndarray:
    """size uniforms from a Philox counter generator keyed by ``key``; draw i belongs to edge i."""
    key = int(key)
    if not 0 <= key < KEY_LIMIT:
        raise ValueError("generator key must lie in [0, 2^128)")
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random(size)


@dataclass(frozen=True, eq=False)
class CapacityField:
    """Per-edge capacities as integer numerators over D, in the host lattice's edge order."""

    lattice: LatticeGraph
    numerators: np.ndarray
    D: int
    seed: int | None = None
    law: CapacityLaw | None = None

    def __post_init__(self) -> None:
        nums = np.ascontiguousarray(np.asarray(self.numerators, dtype=np.int64))
        nums.flags.writeable = False
        object.__setattr__(self, "numerators", nums)
        if len(nums) != self.lattice.num_edges:
            raise LawError(f"field has {len(nums)} capacities for {self.lattice.num_edges} edges")
        if np.any(nums < 0):
            raise LawError("negative capacity in field")
        if self.law is not None and np.any(nums > self.law.M * self.D):
            raise LawError("capacity exceeds M")

    def capacity(self, edge_ids: Iterable[int] | np.ndarray) -> int:
        """V(edges) as an integer numerator over D."""
        ids = np.asarray(list(edge_ids) if not isinstance(edge_ids, np.ndarray) else edge_ids, dtype=np.int64)
        return int(self.numerators[ids].sum()) if len(ids) else 0

    def capacity_value(self, edge_ids: Iterable[int] | np.ndarray) -> Fraction:
        return Fraction(self.capacity(edge_ids), self.D)

    def values(self) -> np.ndarray:
        return self.numerators / float(self.D)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.D).encode())
        h.update(self.numerators.tobytes())
        return h.hexdigest()

    def with_numerators(self, numerators: np.ndarray) -> "CapacityField":
        return CapacityField(self.lattice, numerators, self.D, self.seed, None)

    def to_csv(self, fh: TextIO) -> None:
        lat = self.lattice
        d = lat.d
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["edge", *[f"u{i}" for i in range(d)], *[f"v{i}" for i in range(d)], "numerator", "D"])
        for j, (u, v) in enumerate(lat.edges):
            w.writerow([j, *lat.points[u].tolist(), *lat.points[v].tolist(), int(self.numerators[j]), self.D])


def sample_field(lattice: LatticeGraph, law: CapacityLaw, seed: int) -> CapacityField:
    """One i.i.d. draw per edge, edge i taking draw i of the stream keyed by seed."""
    E = lattice.num_edges
    nums = law.numerators
    if law.is_dirac:
        out = np.full(E, nums[0], dtype=np.int64)
    else:
        u = uniform_stream(seed, E)
        cdf = np.cumsum(law.probs)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, u, side="right")
        out = nums[np.minimum(idx, len(nums) - 1)]
    return CapacityField(lattice, out, law.D, int(seed), law)


def constant_field(lattice: LatticeGraph, value: int = 1, D: int = 1) -> CapacityField:
    return CapacityField(lattice, np.full(lattice.num_edges, int(value), dtype=np.int64), D)
