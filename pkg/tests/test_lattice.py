import json
import warnings

import numpy as np
import pytest

from fpp_cutlab.errors import DegenerateDiscretization, GeometryError, ResourceLimitError
from fpp_cutlab.geometry import Ball, DomainSpec, VoxelSet, voxel_region_distance
from fpp_cutlab.lattice import (
    Hyperrectangle,
    ball_boundaries,
    build_ball,
    build_cylinder,
    build_lattice,
    dump_lattice,
    lattice_summary,
)

from .oracles import enumerate_box_domain


def pts(lat, idx=None):
    P = lat.points if idx is None else lat.points[idx]
    return sorted(map(tuple, P.tolist()))


def test_unit_box_n2():
    lat = build_lattice(DomainSpec.unit_box(2), 2)
    assert lat.num_vertices == 9 and lat.num_edges == 12
    assert pts(lat) == [(i, j) for i in range(3) for j in range(3)]
    assert pts(lat, lat.gamma1) == [(0, 0), (0, 1), (0, 2)]
    assert pts(lat, lat.gamma2) == [(2, 0), (2, 1), (2, 2)]
    gamma = pts(lat, np.flatnonzero(lat.gamma))
    assert len(gamma) == 8 and (1, 1) not in gamma


@pytest.mark.parametrize("d, n", [(2, 1), (2, 5), (2, 9), (3, 2), (3, 4)])
def test_box_closed_form_counts(d, n):
    lat = build_lattice(DomainSpec.unit_box(d), n)
    assert lat.num_vertices == (n + 1) ** d
    assert lat.num_edges == d * n * (n + 1) ** (d - 1)


@pytest.mark.parametrize("box, n", [([[0, 1], [0, 1]], 3), ([[0.25, 1.5], [0, 0.7]], 4), ([[0, 2], [0, 1], [0, 0.5]], 3)])
def test_matches_enumeration_oracle(box, n):
    d = len(box)
    spec = DomainSpec.from_json({"d": d, "solid": [{"box": box}], "gamma1": [{"face": "x0-min"}], "gamma2": [{"face": "x0-max"}]})
    lat = build_lattice(spec, n)
    want_pts, want_edges = enumerate_box_domain([b[0] for b in box], [b[1] for b in box], n)
    assert pts(lat) == want_pts
    got = sorted((tuple(lat.points[u]), tuple(lat.points[v])) for u, v in lat.edges)
    assert got == sorted(want_edges)


def test_gamma_invariants():
    spec = DomainSpec.from_json(
        {"d": 2, "solid": [{"box": [[0, 2], [0, 1]]}], "gamma1": [{"rect": [[0, 0], [0, 1]]}], "gamma2": [{"rect": [[0.5, 2], [1, 1]]}]}
    )
    for n in (2, 4, 7):
        lat = build_lattice(spec, n)
        g1, g2 = set(lat.gamma1.tolist()), set(lat.gamma2.tolist())
        gamma = set(np.flatnonzero(lat.gamma).tolist())
        assert not g1 & g2
        assert g1 <= gamma and g2 <= gamma
        assert lat.edges.max() < lat.num_vertices


def test_deterministic_rebuild():
    spec = DomainSpec.unit_box(3)
    assert dump_lattice(build_lattice(spec, 3)) == dump_lattice(build_lattice(spec, 3))


def test_vertex_order_lexicographic():
    lat = build_lattice(DomainSpec.unit_box(2), 4)
    P = [tuple(p) for p in lat.points.tolist()]
    assert P == sorted(P)


def test_memory_budget():
    with pytest.raises(ResourceLimitError):
        build_lattice(DomainSpec.unit_box(3), 200, edge_budget=10_000)


def test_degenerate_discretization():
    spec = DomainSpec.from_json(
        {"d": 2, "solid": [{"box": [[0, 1], [0, 1]]}], "gamma1": [{"rect": [[0, 0], [0.1, 0.2]]}], "gamma2": [{"rect": [[0, 0], [0.25, 0.3]]}]}
    )
    with pytest.raises(DegenerateDiscretization, match="degenerate discretization"):
        build_lattice(spec, 2)


def test_summary_and_json():
    lat = build_lattice(DomainSpec.unit_box(2), 2)
    s = lattice_summary(lat)
    assert (s["vertices"], s["edges"], s["gamma1"], s["gamma2"]) == (9, 12, 3, 3)
    doc = json.loads(dump_lattice(lat))
    assert len(doc["vertices"]) == 9 and len(doc["edges"]) == 12


def test_box_voxelization_distance_shrinks():
    spec = DomainSpec.unit_box(2)
    dists = [voxel_region_distance(VoxelSet.from_points(n, build_lattice(spec, n).points), spec.solid[0]) for n in (4, 8, 16)]
    assert dists[0] > dists[1] > dists[2]


def test_ball_voxelization_distance_shrinks():
    region = Ball((0.5, 0.5), 0.5)
    dists = []
    for n in (4, 8, 16):
        Z = np.array([(i, j) for i in range(-2, n + 3) for j in range(-2, n + 3)])
        dists.append(float(voxel_region_distance(VoxelSet.from_points(n, Z[region.within_linf(Z, n)]), region)))
    assert dists[0] > dists[1] > dists[2]


# -- cylinders -------------------------------------------------------------


def test_cylinder_vertices_and_sign_rule():
    A = Hyperrectangle.axis_face(2, 1)  # [0,1] x {0}
    cyl = build_cylinder(A, 1, (0, 1), 2)
    assert pts(cyl) == [(i, j) for i in range(3) for j in range(-2, 3)]
    c = np.asarray(A.center) * 2
    top, bot = cyl.points[cyl.top], cyl.points[cyl.bottom]
    assert np.all((c - top) @ np.array([0, 1]) > 0)
    assert np.all((c - bot) @ np.array([0, 1]) < 0)
    assert not set(cyl.top.tolist()) & set(cyl.bottom.tolist())


def test_cylinder_n1_extreme_rows():
    cyl = build_cylinder(Hyperrectangle.axis_face(2, 1), 1, (0, 1), 1)
    rows = {tuple(sorted(p[1] for p in cyl.points[idx].tolist())) for idx in (cyl.top, cyl.bottom)}
    assert rows == {(-1, -1), (1, 1)}


def test_cylinder_boundary_vertices_have_outside_neighbour():
    A = Hyperrectangle.segment((0.1, 0.2), (1, 2), 1.3)
    v = np.array([2, -1]) / np.sqrt(5)
    cyl = build_cylinder(A, 0.6, v, 6)
    S = set(map(tuple, cyl.points.tolist()))
    for idx in (cyl.top, cyl.bottom):
        for p in cyl.points[idx].tolist():
            nbrs = [tuple(p[:k] + [p[k] + s] + p[k + 1 :]) for k in range(2) for s in (-1, 1)]
            assert any(q not in S for q in nbrs)


def test_cylinder_preconditions():
    A = Hyperrectangle.axis_face(2, 1)
    with pytest.raises(GeometryError):
        build_cylinder(A, 0, (0, 1), 2)
    with pytest.raises(GeometryError):
        build_cylinder(A, 1, (1, 0), 2)
    with pytest.raises(GeometryError):
        Hyperrectangle((0, 0), ((1, 0),), (0,))


def test_cylinder_json_roundtrip():
    A = Hyperrectangle.segment((0.1, 0.2), (1, 1), 2.0)
    assert Hyperrectangle.from_json(A.to_json()) == A


# -- balls -----------------------------------------------------------------


def test_ball_boundaries_by_enumeration():
    ball = build_ball((0, 0), 1, (1, 0), 2)
    inside = {(i, j) for i in range(-2, 3) for j in range(-2, 3) if i * i + j * j <= 4}
    assert pts(ball) == sorted(inside)
    want_plus, want_minus = set(), set()
    for z in inside:
        for k in range(2):
            for s in (-1, 1):
                w = list(z)
                w[k] += s
                if tuple(w) not in inside:
                    (want_plus if w[0] >= 0 else want_minus).add(z)
    assert set(pts(ball, ball.upper)) == want_plus
    assert set(pts(ball, ball.lower)) == want_minus


def test_ball_boundaries_cover_outer_layer():
    ball = build_ball((0.1, -0.2), 1.3, (0.6, 0.8), 5)
    outer = np.flatnonzero(ball.has_outside_neighbor())
    assert set(outer.tolist()) == set(ball.upper.tolist()) | set(ball.lower.tolist())


def test_small_ball_empty_with_warning():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        ball = build_ball((0.3, 0.3), 0.1, (1, 0), 2)
    assert ball.num_vertices == 0
    assert w


def test_ball_slab_restriction():
    ball = build_ball((0, 0), 1, (1, 0), 8, slab_halfheight=0.25)
    kept = ball.points[ball.slab]
    assert len(kept) and np.all(np.abs(kept[:, 0] / 8) <= 0.25 + 1e-12)
    assert not np.any(np.abs(ball.points[~ball.slab][:, 0] / 8) <= 0.25)


def test_ball_boundaries_function_matches_region():
    ball = build_ball((0, 0), 1, (0, 1), 4)
    up, lo = ball_boundaries(ball.points, 4, (0, 0), 1, (0, 1))
    assert np.array_equal(np.flatnonzero(up), ball.upper)
    assert np.array_equal(np.flatnonzero(lo), ball.lower)
