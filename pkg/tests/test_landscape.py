import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bistable_ring.landscape import (
    DisconnectedGraphError,
    OutsideWindowError,
    barrier_height,
    connect_saddles,
    deduplicate,
    desync_predictions,
    droplet_path,
    find_stationary_points,
    minimax_saddle,
    n2_oracle,
    n2_values,
    n3_critical_coupling,
    n3_oracle,
    n4_feasibility_end,
    n4_hessian_det,
    n4_hessian_det_exact,
    n4_reduced_roots,
    n4_root_count_events,
    newton_refine,
    scan_bifurcations,
    synchronised_minima,
    weak_coupling_audit,
)
from bistable_ring.model import ModelParams, gamma_1, gradient, hessian, index_type, potential
from bistable_ring.symmetry import group_elements

# frozen from independent runs of the closed-form oracles
N3_CRITICAL = 0.27013631642284514
N4_COUNT_EVENTS = ((0.26844278696, 4, 2), (0.40045785335, 2, 0))


def _same_points(a, b, tol=1e-7):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return all(np.min(np.max(np.abs(b - x), axis=1)) < tol for x in a)


# --- closed-form oracles -----------------------------------------------------


@pytest.mark.parametrize("gamma", [0.05, 0.2, 0.3, 0.4, 0.45, 0.6, 1.2])
def test_n2_enumeration_matches_oracle(gamma):
    p = ModelParams(2, gamma)
    s = find_stationary_points(p)
    oracle = n2_oracle(gamma)
    assert _same_points(s.coords, [q.coords for q in oracle])
    vals = n2_values(gamma)
    for q in oracle:
        if q.branch in vals:
            assert q.value == pytest.approx(vals[q.branch], abs=1e-12)


def test_n2_counts():
    assert len(n2_oracle(0.2)) == 9
    assert len(n2_oracle(0.4)) == 5
    assert len(n2_oracle(0.6)) == 3


def test_n3_critical_coupling_closed_form():
    closed = (math.sqrt(3 + 2 * math.sqrt(3)) - math.sqrt(3)) / 3
    assert n3_critical_coupling() == pytest.approx(closed, abs=1e-12)
    assert n3_critical_coupling() == pytest.approx(N3_CRITICAL, abs=1e-14)


@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.3, 0.5, 0.9])
def test_n3_enumeration_matches_oracle(gamma):
    s = find_stationary_points(ModelParams(3, gamma))
    sol = n3_oracle(gamma)
    assert _same_points(s.coords, [q.coords for q in sol.points])


def test_n3_one_saddle_value():
    gamma = 0.5
    lam = 1 - 1.5 * gamma
    sol = n3_oracle(gamma)
    assert sol.value_a == pytest.approx(-(lam**2) / 2, abs=1e-14)


def test_n4_feasibility_closed_form():
    assert n4_feasibility_end() == pytest.approx((3 * math.sqrt(2) - 2) / 7, abs=1e-12)


def test_n4_root_count_events_frozen():
    ev = n4_root_count_events()
    assert len(ev) == len(N4_COUNT_EVENTS)
    for (g, b, a), (g0, b0, a0) in zip(ev, N4_COUNT_EVENTS):
        assert (b, a) == (b0, a0)
        assert g == pytest.approx(g0, abs=1e-8)


@pytest.mark.parametrize("gamma", [0.05, 0.15, 0.25, 0.3])
def test_n4_reconstructed_points_are_stationary(gamma):
    p = ModelParams(4, gamma)
    s = find_stationary_points(p)
    for r in n4_reduced_roots(gamma):
        for x in r.points:
            assert np.max(np.abs(gradient(p, x))) < 1e-9
            assert s.find(x) is not None


@pytest.mark.parametrize("gamma", np.linspace(0.02, 0.39, 8))
def test_n4_exact_determinant(gamma):
    p = ModelParams(4, gamma)
    for r in n4_reduced_roots(gamma):
        for x in r.points:
            h = hessian(p, x)
            d = np.linalg.det(h)
            assert n4_hessian_det_exact(gamma, r.w) == pytest.approx(d, rel=1e-8, abs=1e-10)
            n_neg = index_type(np.linalg.eigvalsh(h))[0]
            assert (n4_hessian_det_exact(gamma, r.w) > 0) == (n_neg % 2 == 0)


@pytest.mark.parametrize("gamma", [0.05, 0.15, 0.2])
def test_n4_printed_determinant_on_small_roots(gamma):
    # the closed form agrees in sign with the Hessian on the three roots of size O(gamma)
    p = ModelParams(4, gamma)
    for r in n4_reduced_roots(gamma):
        if abs(r.w) > 0.5 or not r.points:
            continue
        n_neg = index_type(np.linalg.eigvalsh(hessian(p, r.points[0])))[0]
        assert (n4_hessian_det(gamma, r.w) > 0) == (n_neg % 2 == 0)


def test_n4_printed_determinant_vanishes_on_feasibility_boundary():
    g = 0.3
    assert n4_hessian_det(g, 3 * g**2 / (1 - g)) == pytest.approx(0, abs=1e-14)


# --- enumeration ---------------------------------------------------------------


@pytest.mark.parametrize("n,gamma,count", [(2, 0.2, 9), (3, 0.2, 27), (4, 0.05, 81)])
def test_weak_coupling_counts(n, gamma, count):
    assert len(find_stationary_points(ModelParams(n, gamma))) == count


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_strong_coupling_leaves_three_points(n):
    s = find_stationary_points(ModelParams(n, 1.05 * gamma_1(n)))
    assert len(s) == 3
    # the origin keeps only the synchronised direction unstable
    assert s.index_counts() == {0: 2, 1: 1}


@pytest.mark.parametrize("n,gamma", [(3, 0.2), (4, 0.3), (5, 0.1)])
def test_stationary_set_closed_under_group(n, gamma):
    s = find_stationary_points(ModelParams(n, gamma))
    assert s.is_closed()
    for g in group_elements(n):
        assert _same_points(s.coords, g.apply(s.coords))


def test_points_are_refined_and_values_consistent():
    p = ModelParams(4, 0.2)
    s = find_stationary_points(p)
    for q in s.points:
        assert q.residual < 1e-9
        assert q.value == pytest.approx(potential(p, q.coords), abs=1e-12)


def test_morse_parity_sum():
    # sum over nondegenerate points of (-1)^index equals the Euler characteristic 1
    for n, gamma in [(3, 0.2), (4, 0.1), (4, 0.35)]:
        s = find_stationary_points(ModelParams(n, gamma))
        assert s.n_degenerate() == 0
        assert sum((-1) ** k * c for k, c in s.index_counts().items()) == 1


def test_newton_refine_lands_on_minimum():
    p = ModelParams(3, 0.1)
    x, ok = newton_refine(p, np.array([0.9, 1.1, 1.05]))
    assert ok.all()
    assert np.allclose(x[0], np.ones(3), atol=1e-10)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
@settings(max_examples=30)
def test_deduplicate_is_idempotent(v):
    x = np.array(v)
    pts = np.array([x, x + 1e-12, -x, x])
    once = deduplicate(pts)
    assert len(deduplicate(once)) == len(once)
    assert len(once) in (1, 2)


# --- transition graph -----------------------------------------------------------


@pytest.mark.parametrize(
    "n,gamma,vertices,edges",
    [(3, 0.05, 8, 12), (3, 0.3, 2, 6), (2, 0.6, 2, 1), (2, 0.4, 2, 2), (4, 0.05, 16, 32)],
)
def test_graph_shapes(n, gamma, vertices, edges):
    p = ModelParams(n, gamma)
    graph = connect_saddles(p, find_stationary_points(p))
    assert graph.n_vertices == vertices
    assert graph.n_edges == edges
    assert graph.unresolved == []


def test_graph_above_threshold_goes_through_origin():
    p = ModelParams(2, 0.6)
    s = find_stationary_points(p)
    graph = connect_saddles(p, s)
    (edge,) = graph.edges
    assert np.allclose(s.points[edge.saddle].coords, 0)
    assert barrier_height(p, graph) == pytest.approx(0.25, abs=1e-12)
    lo, hi = synchronised_minima(s)
    level, _ = minimax_saddle(graph, lo, hi)
    assert level - s.points[lo].value == pytest.approx(0.5, abs=1e-12)


def test_n2_barrier_through_mixed_saddle():
    gamma = 0.4
    p = ModelParams(2, gamma)
    h = barrier_height(p, connect_saddles(p, find_stationary_points(p)))
    lam = 1 - 2 * gamma
    # barrier per particle, from V(A) = -lambda1^2 / 2 and V(I) = -1/2
    assert h == pytest.approx((0.5 - lam**2 / 2) / 2, abs=1e-12)


def test_degenerate_gate_raises():
    p = ModelParams(2, 0.5)
    with pytest.raises(DisconnectedGraphError):
        barrier_height(p, connect_saddles(p, find_stationary_points(p)))


# --- weak coupling and the threshold ----------------------------------------------


@pytest.mark.parametrize("n", [3, 4])
def test_weak_coupling_audit(n):
    rep = weak_coupling_audit(ModelParams(n, 0.05))
    assert rep.count_ok
    assert rep.ambiguous == 0
    assert rep.max_value_error < 0.02
    assert rep.droplet_optimal
    assert rep.barrier == pytest.approx(0.25 + 1.5 * 0.05, abs=0.01)
    assert rep.first_saddle_barrier == pytest.approx(0.25 + 0.05 / 2, abs=0.01)


def test_droplet_path_alternates():
    path = droplet_path(4)
    assert len(path) == 9
    assert np.array_equal(path[0], -np.ones(4)) and np.array_equal(path[-1], np.ones(4))
    assert all(np.sum(q == 0) == 1 for q in path[1::2])


def test_desync_window():
    with pytest.raises(OutsideWindowError):
        desync_predictions(ModelParams(6, 0.5 * gamma_1(6)))
    with pytest.raises(ValueError):
        desync_predictions(ModelParams(2, 0.49))


def test_n4_exact_branch():
    gamma = 0.93
    p = ModelParams(4, gamma)
    pred = desync_predictions(p)
    assert np.max(np.abs(gradient(p, pred.a))) < 1e-12
    x = math.sqrt(1 - gamma) * np.array([1, 1, -1, -1])
    assert np.allclose(pred.a, x, atol=1e-15)


@pytest.mark.parametrize("d", [0.02, 0.05, 0.1])
def test_desync_leading_order_n6(d):
    p = ModelParams(6, gamma_1(6) * (1 - d))
    pred = desync_predictions(p)
    (x,), _ = newton_refine(p, pred.a)
    err = np.max(np.abs(x - pred.a))
    assert err <= 0.15 * pred.amplitude
    assert potential(p, x) / 6 == pytest.approx(pred.value_per_site, rel=0.1)


# --- scan ----------------------------------------------------------------------------


def test_scan_n2():
    d = scan_bifurcations(0.2, 0.6, 2)
    got = d.event_locations()
    assert len(got) == 2
    assert got[0] == pytest.approx(1 / 3, abs=1e-4)
    assert got[1] == pytest.approx(0.5, abs=1e-4)
    assert [(e.count_before, e.count_after) for e in d.events] == [(9, 5), (5, 3)]


def test_scan_validates_arguments():
    with pytest.raises(ValueError):
        scan_bifurcations(0.0, 1.0, 2, step=0.1)
    with pytest.raises(ValueError):
        scan_bifurcations(0.5, 0.2, 2)
