import math

import numpy as np
import pytest

from fpp_cutlab.capacity import CapacityLaw, constant_field
from fpp_cutlab.cutgeom import ContinuousCutset, normal_density
from fpp_cutlab.errors import GeometryError, InvariantViolation
from fpp_cutlab.estimators import (
    RateEstimate,
    check_minimality_panel,
    check_weak_triangle,
    clopper_pearson,
    cylinder_samples,
    detect_G_event,
    detect_Gbar_event,
    estimate_domain_flow,
    estimate_flow_constant,
    estimate_lower_tail_rate,
    rate_curve_from_samples,
    triangle_normals,
)
from fpp_cutlab.geometry import DomainSpec, PolyhedralSet, l1_norm
from fpp_cutlab.lattice import Hyperrectangle, build_cylinder, build_lattice

SEG = Hyperrectangle.axis_face(2, 0)  # {0} x [0, 1]
E1 = (1.0, 0.0)


def test_deterministic_flow_constant():
    res = estimate_flow_constant(CapacityLaw.deterministic(1), E1, SEG, 1.0, [2, 4, 8], 3, seed=1)
    for n in (2, 4, 8):
        assert res.samples[n].taus.tolist() == [n + 1] * 3
        assert res.series.at(n).mean == pytest.approx((n + 1) / n)
    assert res.nu_hat == pytest.approx(9 / 8)


def test_flow_constant_homogeneity():
    base = estimate_flow_constant(CapacityLaw.two_point(1, 2, 0.5), E1, SEG, 1.0, [6], 20, seed=3)
    scaled = estimate_flow_constant(CapacityLaw.two_point(3, 6, 0.5), E1, SEG, 1.0, [6], 20, seed=3)
    assert np.array_equal(scaled.samples[6].taus, 3 * base.samples[6].taus)
    assert scaled.nu_hat == pytest.approx(3 * base.nu_hat)


def test_flow_constant_series_shrinks_within_support():
    res = estimate_flow_constant(CapacityLaw.two_point(1, 2, 0.5), E1, SEG, 1.0, [4, 8, 16], 200, seed=11)
    stds = res.series.stds
    assert stds[0] > stds[1] > stds[2]
    for n, m in zip(res.series.ns, res.series.means):
        assert (n + 1) / n <= m <= 2 * (n + 1) / n


def test_flow_constant_axis_symmetry():
    law = CapacityLaw.two_point(1, 2, 0.5)
    r1 = estimate_flow_constant(law, (1, 0), Hyperrectangle.axis_face(2, 0), 0.5, [8], 300, seed=5)
    r2 = estimate_flow_constant(law, (0, 1), Hyperrectangle.axis_face(2, 1), 0.5, [8], 300, seed=6)
    s1, s2 = r1.series.at(8), r2.series.at(8)
    assert abs(s1.mean - s2.mean) <= 3 * math.hypot(s1.std, s2.std) / math.sqrt(300)


def test_thin_cylinder_reported_per_n():
    tiny = Hyperrectangle.axis_face(2, 0, side=0.2)
    res = estimate_flow_constant(CapacityLaw.deterministic(1), E1, tiny, 0.1, [1, 8, 32], 2, seed=0)
    assert res.series.at(1).error and res.series.at(8).error
    assert res.series.at(32).error is None
    assert res.nu_hat == res.series.at(32).mean


def test_structurally_impossible_threshold():
    law = CapacityLaw.two_point(1, 2, 0.5)
    est = estimate_lower_tail_rate(law, E1, SEG, 1.0, 16, [0.5], 100, seed=1)
    assert est[0].structurally_impossible and est[0].p_hat == 0 and est[0].J_hat == math.inf


def test_rate_curve_lln_regime():
    law = CapacityLaw.two_point(1, 2, 0.5)
    cyl = build_cylinder(SEG, 1.0, E1, 16)
    s = cylinder_samples(cyl, law, 200, seed=2)
    nu = float(s.normalized.mean())
    (est,) = rate_curve_from_samples(s, law, [nu + 0.2])
    assert est.p_hat > 0.9


def test_rate_curve_monotone_on_grid():
    law = CapacityLaw.two_point(1, 2, 0.5)
    s = cylinder_samples(build_cylinder(SEG, 0.5, E1, 8), law, 300, seed=4)
    curve = rate_curve_from_samples(s, law, np.linspace(0.8, 2.2, 29))
    J = [e.J_hat for e in curve]
    assert all(a >= b for a, b in zip(J, J[1:]))
    with pytest.raises(ValueError):
        rate_curve_from_samples(s, law, [1.5, 1.2])


def test_structural_floor_violation_detected(monkeypatch):
    import fpp_cutlab.estimators as est

    # zero capacities break the floor delta_G * mincard that the law promises
    monkeypatch.setattr(est, "sample_field", lambda lat, law, seed: constant_field(lat, 0))
    with pytest.raises(InvariantViolation):
        cylinder_samples(build_cylinder(SEG, 1.0, E1, 4), CapacityLaw.deterministic(1), 2, seed=0)


def test_clopper_pearson_bounds():
    lo, hi = clopper_pearson(0, 100)
    assert lo == 0 and hi == pytest.approx(0.0362167, rel=1e-4)
    lo, hi = clopper_pearson(100, 100)
    assert hi == 1 and lo == pytest.approx(0.963783, rel=1e-4)
    e = RateEstimate(1.0, 4, 100, 0, 1.0, 2)
    assert e.J_hat == math.inf and e.J_ci[0] > 0


def test_domain_flow_deterministic():
    res = estimate_domain_flow(DomainSpec.unit_box(2), CapacityLaw.deterministic(1), [2, 5, 9], 2, seed=0)
    for n in (2, 5, 9):
        assert res.series.at(n).mean == pytest.approx((n + 1) / n)
        assert np.all(res.zhang(n) == (n + 1) / n)


def test_domain_flow_two_point_bounds_and_panel():
    panel = [PolyhedralSet.box([[0, 0.5], [0, 1]]).cells[0]]
    res = estimate_domain_flow(DomainSpec.unit_box(2), CapacityLaw.two_point(1, 2, 0.5), [6], 30, seed=9, panel=panel)
    x = res.phis[6] / 6
    assert np.all(x >= 7 / 6) and np.all(x <= 14 / 6)
    assert res.distances[6].shape == (30, 1)
    assert np.all(res.distances[6] >= 0)


def test_domain_flow_corruption_hook():
    with pytest.raises(InvariantViolation):
        estimate_domain_flow(DomainSpec.unit_box(2), CapacityLaw.deterministic(1), [3], 1, seed=0, corrupt=True)


# -- ball events -------------------------------------------------------------

BIG = DomainSpec.from_json({"d": 2, "solid": [{"box": [[0, 4], [0, 4]]}], "gamma1": [{"face": "x0-min"}], "gamma2": [{"face": "x0-max"}]})


@pytest.fixture(scope="module")
def big8():
    lat = build_lattice(BIG, 8)
    return lat, constant_field(lat)


def test_gbar_crossing_count(big8):
    lat, field = big8
    assert detect_Gbar_event((2, 2), 1, E1, 0.25, 1.2, lat, field).state is True
    assert detect_Gbar_event((2, 2), 1, E1, 0.25, 0.8, lat, field).state is False


def test_gbar_zero_threshold_false(big8):
    lat, field = big8
    assert detect_Gbar_event((2, 2), 1, E1, 0.25, 0.0, lat, field).state is False


def test_gbar_generous_threshold_true(big8):
    lat, field = big8
    assert detect_Gbar_event((2, 2), 1, E1, 0.25, 1e6, lat, field).state is True


def test_gbar_empty_slab_false():
    lat = build_lattice(BIG, 2)
    ev = detect_Gbar_event((2.2, 2.2), 0.2, E1, 0.1, 10.0, lat, constant_field(lat))
    assert ev.state is False and ev.diagnostic


def test_g_event_tristate(big8):
    lat, field = big8
    assert detect_G_event((2, 2), 1, E1, 0.001, 0.5, lat, field).state is False
    yes = detect_G_event((2, 2), 1, E1, 0.2, 1.5, lat, field)
    assert yes.state is True and len(yes.witness)


def test_g_event_undecided_when_cut_is_displaced(big8):
    lat, _ = big8
    # make the edges crossing the centre line expensive so the cheapest cut sits one column away
    caps = np.ones(lat.num_edges, dtype=np.int64)
    lo = lat.points[lat.edges[:, 0]]
    hi = lat.points[lat.edges[:, 1]]
    caps[(lo[:, 0] == 16) & (hi[:, 0] == 17)] = 3
    caps[(lo[:, 0] == 15) & (hi[:, 0] == 16)] = 3
    field = constant_field(lat).with_numerators(caps)
    ev = detect_G_event((2, 2), 1, E1, 0.0001, 1.0, lat, field)
    assert ev.state is None


# -- triangle and minimality -------------------------------------------------


def flat_curve(lams, n=8, reps=100, hits=100):
    return [RateEstimate(l, n, reps, hits, 1.0, 2) for l in lams]


def test_triangle_trivial_when_rates_vanish():
    lams = [1.0, 1.5, 2.0]
    curves = {k: flat_curve(lams) for k in "ABC"}
    rep = check_weak_triangle(curves, (0, 0), (1, 0), (0, 1), slack=1e-9)
    assert rep.ok and rep.checked == 9


def test_triangle_degenerate_directions_rejected():
    curves = {k: flat_curve([1.0]) for k in "ABC"}
    with pytest.raises(GeometryError):
        check_weak_triangle(curves, (0, 0), (1, 0), (0, 1), directions={k: (1, 0) for k in "ABC"})
    with pytest.raises(GeometryError):
        triangle_normals((0, 0), (1, 1), (2, 2))


def test_triangle_normals_right_isoceles():
    nA, nB, nC = triangle_normals((0, 0), (1, 0), (0, 1))
    assert np.allclose(nA, np.array([1, 1]) / math.sqrt(2))
    assert np.allclose(nB, (-1, 0)) and np.allclose(nC, (0, -1))


def test_minimality_examples():
    spec = DomainSpec.unit_box(2)
    flat = PolyhedralSet.box([[0, 0.5], [0, 1]])
    E = ContinuousCutset(flat, spec, normal_density(l1_norm))
    assert check_minimality_panel(E, [ContinuousCutset(flat, spec)], l1_norm).minimal
    assert check_minimality_panel(E, [], l1_norm).minimal


def test_minimality_detects_cheaper_competitor():
    spec = DomainSpec.unit_box(2)
    # a staircase cut has more surface than the flat one, so capa(E) exceeds the flat competitor's
    E = ContinuousCutset(PolyhedralSet((PolyhedralSet.box([[0, 0.3], [0, 0.5]]).cells[0], PolyhedralSet.box([[0, 0.7], [0.5, 1]]).cells[0])), spec)
    E = E.with_density(normal_density(l1_norm))
    F = ContinuousCutset(PolyhedralSet.box([[0, 0.9], [0, 1]]), spec)
    rep = check_minimality_panel(E, [F], l1_norm)
    assert rep.violators == (0,)
    half = E.with_density(lambda p: 0.5 * l1_norm(p.normal))
    assert check_minimality_panel(half, [F], l1_norm).minimal
