from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpp_cutlab.capacity import CapacityLaw, constant_field, sample_field
from fpp_cutlab.errors import ResourceLimitError
from fpp_cutlab.flow import (
    CutSet,
    brute_force_min_cut,
    edge_boundary,
    is_cutset,
    is_epsilon_cutset,
    max_flow,
    min_cardinality_cut,
)
from fpp_cutlab.geometry import DomainSpec
from fpp_cutlab.lattice import Hyperrectangle, LatticeGraph, build_cylinder, build_lattice

from .oracles import edmonds_karp, separates


def two_vertex():
    return LatticeGraph.from_points(1, np.array([[0, 0], [1, 0]]))


@pytest.fixture(scope="module")
def box2():
    return build_lattice(DomainSpec.unit_box(2), 2)


def test_single_edge():
    g = two_vertex()
    res = max_flow(g, np.array([3]), [0], [1])
    assert res.value == 3 and res.cut.edges.tolist() == [0]


def test_box_n2_value_and_canonical_cut(box2):
    res = max_flow(box2, constant_field(box2), box2.sources, box2.sinks)
    assert res.phi == 3
    cut_pts = sorted(tuple(map(tuple, box2.points[box2.edges[j]].tolist())) for j in res.cut.edges)
    assert cut_pts == [((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 2), (1, 2))]
    assert sorted(map(tuple, box2.points[res.reachable].tolist())) == [(0, 0), (0, 1), (0, 2)]


def test_disconnected_terminals():
    g = LatticeGraph.from_points(1, np.array([[0, 0], [5, 5]]))
    res = max_flow(g, np.zeros(0, dtype=np.int64), [0], [1])
    assert res.value == 0 and len(res.cut) == 0
    assert min_cardinality_cut(g, [0], [1]) == 0


def test_overlapping_terminals_rejected(box2):
    with pytest.raises(ValueError):
        max_flow(box2, constant_field(box2), [0, 1], [1, 2])


def test_flow_assignment_is_feasible(box2):
    field = sample_field(box2, CapacityLaw.two_point(1, 3, 0.5), 4)
    res = max_flow(box2, field, box2.sources, box2.sinks)
    assert np.all(np.abs(res.edge_flow) <= field.numerators)
    net = np.zeros(box2.num_vertices, dtype=np.int64)
    np.add.at(net, box2.edges[:, 0], -res.edge_flow)
    np.add.at(net, box2.edges[:, 1], res.edge_flow)
    inner = np.ones(box2.num_vertices, dtype=bool)
    inner[box2.sources] = inner[box2.sinks] = False
    assert np.all(net[inner] == 0)
    assert net[box2.sinks].sum() == res.value


def test_is_cutset_examples(box2):
    s, t = box2.sources, box2.sinks
    assert not is_cutset([], box2, s, t)
    assert is_cutset(np.arange(box2.num_edges), box2, s, t)
    res = max_flow(box2, constant_field(box2), s, t)
    assert is_cutset(res.cut, box2, s, t)


def test_epsilon_cutset_examples(box2):
    s, t = box2.sources, box2.sinks
    field = constant_field(box2)
    res = max_flow(box2, field, s, t)
    assert is_epsilon_cutset(res.cut, box2, field, 0, s, t)
    extra = next(j for j in range(box2.num_edges) if j not in set(res.cut.edges.tolist()))
    bigger = np.append(res.cut.edges, extra)
    n = box2.n
    assert is_epsilon_cutset(bigger, box2, field, Fraction(2, n), s, t)
    assert not is_epsilon_cutset(bigger, box2, field, 0, s, t)
    with pytest.raises(ValueError):
        is_epsilon_cutset([], box2, field, 1, s, t)


def test_edge_boundary_examples():
    lat = build_lattice(DomainSpec.unit_box(2), 2)
    assert len(edge_boundary(np.arange(lat.num_vertices), lat)) == 0
    center = int(lat.index_of(np.array([[1, 1]]))[0])
    assert len(edge_boundary([center], lat)) == 4
    left = lat.index_of(np.array([[0, 0], [0, 1], [0, 2]]))
    crossing = edge_boundary(left, lat)
    assert len(crossing) == 3
    assert all(sorted(lat.points[lat.edges[j], 0].tolist()) == [0, 1] for j in crossing)
    full = edge_boundary(np.arange(lat.num_vertices), lat, universe="full")
    assert len(full) == 12


def test_cut_equals_boundary_of_reachable(box2):
    field = sample_field(box2, CapacityLaw.two_point(0, 1, 0.6), 8)
    res = max_flow(box2, field, box2.sources, box2.sinks)
    assert res.cut.edges.tolist() == edge_boundary(np.flatnonzero(res.reachable), box2).tolist()


def test_brute_force_examples(box2):
    g = two_vertex()
    assert brute_force_min_cut(g, np.array([5]), [0], [1]).edges.tolist() == [0]
    assert brute_force_min_cut(box2, constant_field(box2), box2.sources, box2.sinks).capacity == 3


def test_brute_force_size_guard():
    lat = build_lattice(DomainSpec.unit_box(2), 4)
    with pytest.raises(ResourceLimitError):
        brute_force_min_cut(lat, constant_field(lat), lat.sources, lat.sinks)


def test_min_cardinality_examples(box2):
    assert min_cardinality_cut(box2, box2.sources, box2.sinks) == 3
    cyl = build_cylinder(Hyperrectangle.axis_face(2, 1), 1, (0, 1), 4)
    assert min_cardinality_cut(cyl, cyl.sources, cyl.sinks) == 5


def test_cutset_rejects_duplicates(box2):
    with pytest.raises(ValueError):
        CutSet(np.array([1, 1]), 2, 1, 2)


small_shapes = st.sampled_from([((0, 1), (0, 1), 3), ((0, 2), (0, 1), 2), ((0, 1), (0, 1), 5), ((0, 1), (0, 0.5), 4)])


@settings(max_examples=60, deadline=None)
@given(small_shapes, st.integers(0, 2**32), st.sampled_from([(0, 1, 0.6), (1, 2, 0.5), (0, 3, 0.5)]))
def test_agrees_with_edmonds_karp(shape, seed, lawp):
    xs, ys, n = shape
    spec = DomainSpec.from_json({"d": 2, "solid": [{"box": [list(xs), list(ys)]}], "gamma1": [{"face": "x0-min"}], "gamma2": [{"face": "x0-max"}]})
    lat = build_lattice(spec, n)
    field = sample_field(lat, CapacityLaw.two_point(*lawp), seed)
    res = max_flow(lat, field, lat.sources, lat.sinks)
    want = edmonds_karp(lat.num_vertices, lat.edges.tolist(), field.numerators.tolist(), lat.sources, lat.sinks)
    assert res.value == want
    assert separates(lat.num_vertices, lat.edges.tolist(), res.cut.edges, lat.sources, lat.sinks)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 200))
def test_weak_duality_random_cuts(seed, k):
    lat = build_lattice(DomainSpec.unit_box(2), 4)
    field = sample_field(lat, CapacityLaw.two_point(1, 2, 0.5), seed)
    phi = max_flow(lat, field, lat.sources, lat.sinks).value
    rng = np.random.default_rng(k)
    # a random vertex set containing the sources and avoiding the sinks gives a cutset
    U = rng.random(lat.num_vertices) < 0.5
    U[lat.sources] = True
    U[lat.sinks] = False
    cut = edge_boundary(np.flatnonzero(U), lat)
    assert is_cutset(cut, lat, lat.sources, lat.sinks)
    assert field.capacity(cut) >= phi


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 10**6))
def test_capacity_monotone_under_perturbation(seed, j):
    lat = build_lattice(DomainSpec.unit_box(2), 5)
    field = sample_field(lat, CapacityLaw.two_point(0, 1, 0.6), seed)
    base = max_flow(lat, field, lat.sources, lat.sinks).value
    bumped = field.numerators.copy()
    bumped[j % lat.num_edges] += 1
    assert max_flow(lat, bumped, lat.sources, lat.sinks).value >= base


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_floor_from_min_cardinality(seed):
    lat = build_lattice(DomainSpec.unit_box(2), 6)
    law = CapacityLaw.two_point(1, 2, 0.5)
    phi = max_flow(lat, sample_field(lat, law, seed), lat.sources, lat.sinks).value
    assert phi >= int(law.delta_G * law.D) * min_cardinality_cut(lat, lat.sources, lat.sinks)
