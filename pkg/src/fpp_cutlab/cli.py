"""Command-line experiment runner.

Usage::

    fpp-cutlab run --config cfg.json [--seed S] [--threads N] [--out DIR] [--json]
    fpp-cutlab flow-constant --config cfg.json      # experiment kind as subcommand
    fpp-cutlab verify --config cfg.json
    fpp-cutlab oracle-check [--trials 200] [--seed S]
    fpp-cutlab invariants [--seed S]

Exit codes: 0 ok, 2 configuration error, 3 invariant violation, 4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence, TextIO

import numpy as np

from . import __version__
from .capacity import CapacityLaw, replicate_stream, sample_field, validate_law
from .cutgeom import (
    ContinuousCutset,
    continuous_representation,
    discrete_perimeter_bound,
    empirical_measure,
    l1_surface_energy,
    normal_density,
)
from .errors import ConfigError, DegenerateDiscretization, GeometryError, InvariantViolation, LawError, ResourceLimitError
from .estimators import (
    check_minimality_panel,
    check_weak_triangle,
    cylinder_samples,
    detect_G_event,
    detect_Gbar_event,
    estimate_domain_flow,
    estimate_flow_constant,
    rate_curve_from_samples,
    triangle_normals,
)
from .flow import brute_force_min_cut, is_cutset, max_flow, min_cardinality_cut
from .geometry import Box, ConvexPolytope, DomainSpec, PolyhedralSet, l1_norm
from .lattice import DEFAULT_EDGE_BUDGET, Hyperrectangle, LatticeGraph, build_cylinder, build_lattice, estimate_size

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RESOURCE = 0, 2, 3, 4

KINDS = (
    "domain-flow",
    "cylinder-tau",
    "flow-constant",
    "rate-curve",
    "cut-geometry",
    "ball-events",
    "triangle-check",
    "minimality-panel",
)


# ---------------------------------------------------------------------------
# configuration


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    raw: dict
    n_list: list[int] = field(default_factory=list)
    reps: int = 1
    threads: int = 1

    @classmethod
    def parse(cls, raw: dict, *, kind: str | None = None, seed: int | None = None, threads: int | None = None) -> "ExperimentConfig":
        raw = dict(raw)
        if kind is not None:
            raw["experiment"] = kind
        if seed is not None:
            raw["seed"] = seed
        k = raw.get("experiment")
        if k not in KINDS:
            raise ConfigError(f"unknown or missing experiment kind {k!r}; expected one of {', '.join(KINDS)}")
        if "seed" not in raw or raw["seed"] is None:
            raise ConfigError("missing seed: set \"seed\" in the config or pass --seed")
        s = int(raw["seed"])
        if not 0 <= s < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        raw["seed"] = s
        n_list = [int(n) for n in raw.get("n_list", [raw["n"]] if "n" in raw else [])]
        needs_n = k not in ("minimality-panel",)
        if needs_n and not n_list:
            raise ConfigError("n_list must be nonempty")
        if any(n < 1 for n in n_list):
            raise ConfigError("every n must be a positive integer")
        reps = int(raw.get("reps", 1))
        if reps < 1:
            raise ConfigError("reps must be at least 1")
        t = int(threads if threads is not None else raw.get("threads", 1))
        if t < 1:
            raise ConfigError("threads must be at least 1")
        # threads do not affect results, so they stay out of the hashed config
        raw.pop("threads", None)
        return cls(k, s, raw, n_list, reps, t)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def law(self) -> CapacityLaw:
        if "law" not in self.raw:
            raise ConfigError("config has no law")
        return CapacityLaw.from_json(self.raw["law"])

    def domain(self) -> DomainSpec:
        if "domain" not in self.raw:
            raise ConfigError("config has no domain")
        return DomainSpec.from_json(self.raw["domain"])

    @property
    def d(self) -> int:
        if "domain" in self.raw:
            return int(self.raw["domain"]["d"])
        if "cylinder" in self.raw:
            return len(self.raw["cylinder"]["v"])
        return int(self.raw.get("d", 2))


def parse_hyperrectangle(doc: dict, d: int) -> Hyperrectangle:
    if "axis_face" in doc:
        return Hyperrectangle.axis_face(d, int(doc["axis_face"]), doc.get("origin"), float(doc.get("side", 1.0)))
    return Hyperrectangle.from_json(doc)


def parse_cylinder(doc: dict) -> tuple[Hyperrectangle, float, tuple[float, ...]]:
    try:
        v = tuple(float(c) for c in doc["v"])
        A = parse_hyperrectangle(doc["A"], len(v))
        return A, float(doc["h"]), v
    except KeyError as exc:
        raise ConfigError(f"cylinder config missing {exc}") from exc


def parse_region(doc: dict, d: int) -> Any:
    if "box" in doc:
        return Box.from_intervals(doc["box"])
    if "cells" in doc:
        return parse_polyhedral(doc, d)
    raise ConfigError(f"unknown panel region {sorted(doc)}")


def parse_polyhedral(doc: dict, d: int) -> PolyhedralSet:
    cells = []
    for c in doc.get("cells", []):
        if "box" in c:
            cells.append(Box.from_intervals(c["box"]))
        elif "halfspaces" in c:
            cells.append(ConvexPolytope(c["halfspaces"]["A"], c["halfspaces"]["b"]))
        else:
            raise ConfigError(f"unknown cell {sorted(c)}")
    return PolyhedralSet(tuple(cells))


def parse_direction_function(doc: Any, d: int) -> Callable[[np.ndarray], float]:
    """'l1', or {"axis_values": [nu_1..nu_d]} giving sum |v_k| nu_k."""
    if doc in (None, "l1"):
        return l1_norm
    if isinstance(doc, dict) and "axis_values" in doc:
        vals = np.asarray(doc["axis_values"], dtype=float)
        if len(vals) != d:
            raise ConfigError("axis_values needs one entry per dimension")
        return lambda v: float(np.abs(np.asarray(v, float)) @ vals)
    raise ConfigError(f"unknown direction function {doc!r}")


# ---------------------------------------------------------------------------
# experiments; each returns a list of row dicts


def _frac(x: Fraction) -> str:
    return str(x)


def run_flow_constant(cfg: ExperimentConfig) -> list[dict]:
    law = cfg.law()
    A, h, v = parse_cylinder(cfg.raw["cylinder"])
    res = estimate_flow_constant(law, v, A, h, cfg.n_list, cfg.reps, cfg.seed, cfg.threads)
    rows = res.rows()
    for r in rows:
        for k in ("tau_min", "tau_max"):
            if isinstance(r[k], Fraction):
                r[k] = _frac(r[k])
    rows.append({"n": "estimate", "mean": res.nu_hat, "std": "", "reps": "", "ci_lo": res.nu_ci[0], "ci_hi": res.nu_ci[1]})
    return rows


def run_cylinder_tau(cfg: ExperimentConfig) -> list[dict]:
    law = cfg.law()
    A, h, v = parse_cylinder(cfg.raw["cylinder"])
    rows = []
    for n in cfg.n_list:
        cyl = build_cylinder(A, h, v, n)
        s = cylinder_samples(cyl, law, cfg.reps, cfg.seed, cfg.threads)
        for k, t in enumerate(s.taus):
            rows.append({"n": n, "replicate": k, "tau": _frac(Fraction(int(t), s.D)), "mincard": s.mincard})
    return rows


def run_rate_curve(cfg: ExperimentConfig) -> list[dict]:
    law = cfg.law()
    A, h, v = parse_cylinder(cfg.raw["cylinder"])
    samples = {}
    for n in cfg.n_list:
        samples[n] = cylinder_samples(build_cylinder(A, h, v, n), law, cfg.reps, cfg.seed, cfg.threads)
    n_max = max(cfg.n_list)
    nu_hat = float(samples[n_max].normalized.mean())
    if "lambda_grid" in cfg.raw:
        grid = sorted(float(x) for x in cfg.raw["lambda_grid"])
    elif "lambda_offsets" in cfg.raw:
        grid = sorted(nu_hat + float(x) for x in cfg.raw["lambda_offsets"])
    else:
        raise ConfigError("rate-curve needs lambda_grid or lambda_offsets")
    rows = []
    for n in cfg.n_list:
        for est in rate_curve_from_samples(samples[n], law, grid):
            row = est.row()
            row["nu_hat"] = nu_hat
            rows.append(row)
    return rows


def run_domain_flow(cfg: ExperimentConfig) -> list[dict]:
    spec, law = cfg.domain(), cfg.law()
    panel = [parse_region(p, spec.d) for p in cfg.raw.get("panel", [])]
    corrupt = bool(cfg.raw.get("debug", {}).get("corrupt_capacity", False))
    res = estimate_domain_flow(spec, law, cfg.n_list, cfg.reps, cfg.seed, panel, cfg.threads, corrupt=corrupt)
    return res.rows()


def run_cut_geometry(cfg: ExperimentConfig, out_dir: Path | None = None) -> list[dict]:
    spec, law = cfg.domain(), cfg.law()
    rows = []
    for n in cfg.n_list:
        lat = build_lattice(spec, n)
        for k in range(cfg.reps):
            fld = sample_field(lat, law, replicate_stream(cfg.seed, k))
            res = max_flow(lat, fld, lat.sources, lat.sinks)
            mu = empirical_measure(res.cut, fld)
            R = continuous_representation(res.reachable, lat)
            per = discrete_perimeter_bound(res.cut, lat, R, spec)
            if out_dir is not None:
                with open(out_dir / f"mu_n{n}_r{k}.csv", "w", newline="") as fh:
                    mu.to_csv(fh)
                (out_dir / f"R_n{n}_r{k}.json").write_text(json.dumps(R.to_rle(), sort_keys=True))
            rows.append(
                {
                    "n": n,
                    "replicate": k,
                    "phi": _frac(res.phi),
                    "card": len(res.cut),
                    "mass": _frac(mu.total_mass),
                    "R_measure": _frac(R.measure()),
                    "perimeter_bound": _frac(per.bound),
                    "voxel_perimeter": _frac(per.voxel_perimeter) if per.voxel_perimeter is not None else "",
                }
            )
    return rows


def run_ball_events(cfg: ExperimentConfig) -> list[dict]:
    spec, law = cfg.domain(), cfg.law()
    b = cfg.raw.get("ball")
    if not b:
        raise ConfigError("ball-events needs a 'ball' block")
    x, r, v = b["x"], float(b["r"]), b["v"]
    delta, zeta = float(b["delta"]), float(b["zeta"])
    rows = []
    for n in cfg.n_list:
        lat = build_lattice(spec, n)
        counts = {"gbar": 0, "g_true": 0, "g_false": 0, "g_unknown": 0}
        for k in range(cfg.reps):
            fld = sample_field(lat, law, replicate_stream(cfg.seed, k))
            gb = detect_Gbar_event(x, r, v, delta, zeta, lat, fld)
            g = detect_G_event(x, r, v, delta, zeta, lat, fld)
            counts["gbar"] += int(bool(gb.state))
            counts["g_true" if g.state is True else "g_false" if g.state is False else "g_unknown"] += 1
        rows.append({"n": n, "reps": cfg.reps, **counts})
    return rows


def run_triangle_check(cfg: ExperimentConfig) -> list[dict]:
    law = cfg.law()
    tri = cfg.raw.get("triangle")
    if not tri or len(tri) != 3:
        raise ConfigError("triangle-check needs three triangle vertices")
    side = float(cfg.raw.get("side", 1.0))
    h = float(cfg.raw.get("h", 0.5))
    grid = sorted(float(x) for x in cfg.raw["lambda_grid"])
    normals = triangle_normals(*tri)
    curves, dirs, rows = {}, {}, []
    n = max(cfg.n_list)
    for label, nv in zip("ABC", normals):
        tangent = (-nv[1], nv[0])
        A = Hyperrectangle.segment((0.123, 0.0379), tangent, side)
        cyl = build_cylinder(A, h, tuple(nv), n)
        s = cylinder_samples(cyl, law, cfg.reps, cfg.seed, cfg.threads)
        curves[label] = rate_curve_from_samples(s, law, grid)
        dirs[label] = tuple(nv)
        for est in curves[label]:
            rows.append({"direction": label, **est.row()})
    rep = check_weak_triangle(curves, *tri, directions=dirs, slack=float(cfg.raw.get("slack", 0.0)))
    rows.append({"direction": "summary", "checked": rep.checked, "violations": len(rep.violations)})
    return rows


def run_minimality_panel(cfg: ExperimentConfig) -> list[dict]:
    spec = cfg.domain()
    nu = parse_direction_function(cfg.raw.get("nu"), spec.d)
    scale = float(cfg.raw.get("density_scale", 1.0))
    base = normal_density(nu)
    E = ContinuousCutset(parse_polyhedral(cfg.raw.get("E", {}), spec.d), spec, lambda p: scale * base(p))
    panel = [ContinuousCutset(parse_polyhedral(F, spec.d), spec) for F in cfg.raw.get("panel", [])]
    rep = check_minimality_panel(E, panel, nu)
    rows = [{"member": i, "capa": rep.capa, "rhs": r, "violates": int(i in rep.violators)} for i, r in enumerate(rep.rhs)]
    rows.append({"member": "E", "capa": rep.capa, "rhs": "", "violates": int(not rep.minimal), "I0": l1_surface_energy(E)})
    return rows


RUNNERS: dict[str, Callable[..., list[dict]]] = {
    "flow-constant": run_flow_constant,
    "cylinder-tau": run_cylinder_tau,
    "rate-curve": run_rate_curve,
    "domain-flow": run_domain_flow,
    "cut-geometry": run_cut_geometry,
    "ball-events": run_ball_events,
    "triangle-check": run_triangle_check,
    "minimality-panel": run_minimality_panel,
}


# ---------------------------------------------------------------------------
# output


def _cell(v: Any) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[dict], manifest_hash: str, kind: str) -> str:
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["manifest", "experiment", *keys])
    for r in rows:
        w.writerow([manifest_hash, kind, *[_cell(r.get(k, "")) for k in keys]])
    return buf.getvalue()


def rows_to_jsonl(rows: Sequence[dict], manifest_hash: str, kind: str) -> str:
    def conv(v: Any) -> Any:
        if isinstance(v, float) and not math.isfinite(v):
            return _cell(v)
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.floating,)):
            return float(v)
        return v

    lines = [json.dumps({"manifest": manifest_hash, "experiment": kind, **{k: conv(v) for k, v in r.items()}}, sort_keys=True) for r in rows]
    return "".join(line + "\n" for line in lines)


def execute(cfg: ExperimentConfig, out_dir: Path, as_json: bool = False) -> Path:
    """Run an experiment and write results.csv (+ results.jsonl) and manifest.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    law_report = None
    if "law" in cfg.raw:
        law_report = validate_law(cfg.law(), cfg.d)
        for msg in law_report.messages:
            print(f"warning: {msg}", file=sys.stderr)
    runner = RUNNERS[cfg.kind]
    rows = runner(cfg, out_dir) if cfg.kind == "cut-geometry" else runner(cfg)
    h = cfg.hash
    csv_path = out_dir / "results.csv"
    csv_path.write_text(rows_to_csv(rows, h, cfg.kind))
    files = ["results.csv"]
    if as_json:
        (out_dir / "results.jsonl").write_text(rows_to_jsonl(rows, h, cfg.kind))
        files.append("results.jsonl")
    manifest = {
        "manifest": h,
        "experiment": cfg.kind,
        "seed": cfg.seed,
        "config": cfg.raw,
        "law_status": law_report.status if law_report else None,
        "version": __version__,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return csv_path


# ---------------------------------------------------------------------------
# verify, oracle-check, invariants


def verify(raw: dict, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    d = int(raw.get("domain", {}).get("d", 2)) if "domain" in raw else len(raw.get("cylinder", {}).get("v", [0, 0]))
    if "law" in raw:
        rep = validate_law(CapacityLaw.from_json(raw["law"]), d)
        print(f"law: {rep.status} (delta_G = {rep.delta_G}, atom at zero = {rep.atom_at_zero})", file=out)
        for msg in rep.messages:
            print(f"  warning: {msg}", file=out)
    n_list = [int(n) for n in raw.get("n_list", [raw["n"]] if "n" in raw else [])]
    budget = int(raw.get("edge_budget", DEFAULT_EDGE_BUDGET))
    if "domain" in raw:
        spec = DomainSpec.from_json(raw["domain"])
        spec.validate()
        for n in n_list:
            v_est, e_est = estimate_size(spec, n)
            if e_est > budget:
                print(f"n={n}: capacity warning: up to {e_est} edges exceeds the budget of {budget}", file=out)
                continue
            try:
                lat = build_lattice(spec, n, edge_budget=budget)
            except DegenerateDiscretization as exc:
                print(f"n={n}: {exc}", file=out)
                continue
            except ResourceLimitError as exc:
                print(f"n={n}: capacity warning: {exc}", file=out)
                continue
            print(
                f"n={n}: |Omega_n| = {lat.num_vertices} vertices, |Pi_n| = {lat.num_edges} edges, "
                f"|Gamma_n^1| = {len(lat.gamma1)}, |Gamma_n^2| = {len(lat.gamma2)}",
                file=out,
            )
    if "cylinder" in raw:
        A, h, v = parse_cylinder(raw["cylinder"])
        for n in n_list:
            cyl = build_cylinder(A, h, v, n, edge_budget=budget)
            print(f"n={n}: cylinder {cyl.num_vertices} vertices, {cyl.num_edges} edges, |T'| = {len(cyl.top)}, |B'| = {len(cyl.bottom)}", file=out)
    return EXIT_OK


def _random_small_instance(rng: np.random.Generator) -> tuple[LatticeGraph, np.ndarray, np.ndarray, np.ndarray]:
    shapes = [((1, 1), 2), ((2, 1), 1), ((3, 1), 1), ((3, 2), 1), ((1, 1, 1), 1), ((2, 1, 1), 1), ((4, 1), 1), ((2, 2), 1)]
    sides, n = shapes[int(rng.integers(len(shapes)))]
    d = len(sides)
    axis = int(rng.integers(d))
    spec = DomainSpec.from_json(
        {"d": d, "solid": [{"box": [[0, s] for s in sides]}], "gamma1": [{"face": f"x{axis}-min"}], "gamma2": [{"face": f"x{axis}-max"}]}
    )
    lat = build_lattice(spec, n)
    law = [CapacityLaw.deterministic(1), CapacityLaw.two_point(1, 2, 0.5), CapacityLaw.two_point(0, 1, 0.6), CapacityLaw.finite_support([(0, 0.2), (1, 0.3), (3, 0.5)])][int(rng.integers(4))]
    fld = sample_field(lat, law, int(rng.integers(2**63)))
    return lat, fld.numerators, lat.sources, lat.sinks


def oracle_check(trials: int, seed: int, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    rng = np.random.default_rng(seed)
    bad = 0
    done = 0
    while done < trials:
        lat, caps, src, snk = _random_small_instance(rng)
        if lat.num_edges > 20:
            continue
        a = max_flow(lat, caps, src, snk).value
        b = brute_force_min_cut(lat, caps, src, snk).capacity
        done += 1
        if a != b:
            bad += 1
            print(f"mismatch: max_flow {a} vs brute force {b} on {lat.num_edges} edges", file=out)
    print(f"oracle-check: {done - bad}/{done} instances agree", file=out)
    return EXIT_OK if bad == 0 else EXIT_INVARIANT


def invariants(seed: int, out: TextIO | None = None) -> int:
    """Duality, cutset, mass, floor, monotonicity and homogeneity checks on random instances."""
    out = out or sys.stdout
    rng = np.random.default_rng(seed)
    laws = [CapacityLaw.deterministic(1), CapacityLaw.two_point(1, 2, 0.5), CapacityLaw.two_point(0, 1, 0.6)]
    checks = 0
    for _ in range(60):
        d = int(rng.choice([2, 3]))
        n = int(rng.integers(2, 9 if d == 2 else 5))
        lat = build_lattice(DomainSpec.unit_box(d, int(rng.integers(d))), n)
        law = laws[int(rng.integers(len(laws)))]
        fld = sample_field(lat, law, int(rng.integers(2**63)))
        res = max_flow(lat, fld, lat.sources, lat.sinks)
        if not is_cutset(res.cut, lat, lat.sources, lat.sinks):
            raise InvariantViolation("minimal cutset is not a cutset")
        mu = empirical_measure(res.cut, fld)
        if mu.total_mass * n ** (d - 1) != res.phi:
            raise InvariantViolation("mass identity failed")
        if res.value < int(law.delta_G * law.D) * min_cardinality_cut(lat, lat.sources, lat.sinks):
            raise InvariantViolation("structural floor failed")
        doubled = max_flow(lat, fld.numerators * 3, lat.sources, lat.sinks).value
        if doubled != 3 * res.value:
            raise InvariantViolation("homogeneity failed")
        j = int(rng.integers(lat.num_edges))
        bumped = fld.numerators.copy()
        bumped[j] += 1
        if max_flow(lat, bumped, lat.sources, lat.sinks).value < res.value:
            raise InvariantViolation("capacity monotonicity failed")
        checks += 1
    print(f"invariants: {checks} instances passed", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpp-cutlab", description="Maximal flows and minimal cutsets in random lattice environments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="base seed, overrides the config")
        sp.add_argument("--threads", type=int, help="worker processes for replicates")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--json", action="store_true", help="also write rows as JSON lines")

    common(sub.add_parser("run", help="run the experiment named in the config"))
    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    v = sub.add_parser("verify", help="validate a config and print discretization sizes")
    v.add_argument("--config")
    o = sub.add_parser("oracle-check", help="compare max flow against brute force on tiny instances")
    o.add_argument("--trials", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    i = sub.add_parser("invariants", help="run the exact property checks")
    i.add_argument("--seed", type=int, default=0)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return verify(_load_config(args.config))
        if args.command == "oracle-check":
            return oracle_check(args.trials, args.seed)
        if args.command == "invariants":
            return invariants(args.seed)
        raw = _load_config(args.config)
        kind = None if args.command == "run" else args.command
        cfg = ExperimentConfig.parse(raw, kind=kind, seed=args.seed, threads=args.threads)
        path = execute(cfg, Path(args.out), args.json)
        print(f"wrote {path}")
        return EXIT_OK
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, GeometryError, LawError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
