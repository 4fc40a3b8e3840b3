import itertools
import math

import numpy as np
import pytest

from irm_planner.arm import Pose6, planar_two_link
from irm_planner.errors import InputError, UnreachableWaypoint
from irm_planner.graph import (
    BaseConfig,
    Layer,
    LayeredGraph,
    build_graph,
    dijkstra_dp,
    discretize_trajectory,
    path_cost,
    path_length_cost,
    search,
    smoothness_cost,
)
from irm_planner.irm import BaseCandidate, build_irm, query_irm
from irm_planner.reachability import GridSpec, build_rm

TAU = 2 * math.pi


def P(x, y, z=0.0):
    return Pose6(x, y, z, 0, 0, 0)


# ---------------------------------------------------------------- discretize


def test_discretize_uniform_split():
    out = discretize_trajectory([P(0, 0), P(1, 0)], ds=0.5)
    assert [(p.x, p.y) for p in out] == [(0, 0), (0.5, 0), (1, 0)]


def test_discretize_ds_longer_than_path():
    out = discretize_trajectory([P(0, 0), P(0.3, 0)], ds=5.0)
    assert len(out) == 2
    assert out[0] == P(0, 0) and out[1] == P(0.3, 0)


def test_discretize_l_shape_keeps_corner():
    out = discretize_trajectory([P(0, 0), P(1, 0), P(1, 1)], ds=0.5)
    assert len(out) == 5
    assert (out[2].x, out[2].y) == (1.0, 0.0)
    assert (out[-1].x, out[-1].y) == (1.0, 1.0)


def test_discretize_zero_length_rejected():
    with pytest.raises(InputError):
        discretize_trajectory([P(1, 1), P(1, 1)], ds=0.1)


def test_discretize_interpolates_angles_across_wrap():
    a = Pose6(0, 0, 0, 0, 0, 3.0)
    b = Pose6(1, 0, 0, 0, 0, -3.0)  # shortest way crosses pi
    out = discretize_trajectory([a, b], ds=0.5)
    assert out[1].gamma == pytest.approx(math.pi, abs=1e-9) or out[1].gamma == pytest.approx(
        -math.pi + (math.pi - 3.0), abs=1e-2
    )
    assert abs(out[1].gamma) > 3.0  # went through the wrap, not through zero


def test_discretize_endpoints_exact():
    poses = [P(0.123, 4.567), P(0.9, 0.1), P(2.34, -1.2)]
    out = discretize_trajectory(poses, ds=0.37)
    assert out[0] is poses[0]
    assert out[-1] is poses[-1]


# ------------------------------------------------------------------- costs


def test_length_cost_345():
    assert path_length_cost(BaseConfig(0, 0), BaseConfig(3, 4)) == 5.0


def test_length_cost_zero():
    assert path_length_cost(BaseConfig(1, 2), BaseConfig(1, 2)) == 0.0


def test_length_cost_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = BaseConfig(*rng.uniform(-5, 5, 2))
        b = BaseConfig(*rng.uniform(-5, 5, 2))
        assert path_length_cost(a, b) == path_length_cost(b, a)


def test_smoothness_collinear_zero():
    assert smoothness_cost(BaseConfig(0, 0), BaseConfig(1, 0), BaseConfig(2, 0)) == 0.0


def test_smoothness_corner():
    v = smoothness_cost(BaseConfig(0, 0), BaseConfig(1, 0), BaseConfig(1, 1))
    assert v == pytest.approx(math.sqrt(2))


def test_smoothness_translation_invariant():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = rng.uniform(-3, 3, (3, 2))
        off = rng.uniform(-10, 10, 2)
        a = smoothness_cost(*(BaseConfig(*p) for p in pts))
        b = smoothness_cost(*(BaseConfig(*(p + off)) for p in pts))
        assert a == pytest.approx(b, abs=1e-12)


# ------------------------------------------------------------- build_graph


@pytest.fixture(scope="module")
def planar_irm():
    model = planar_two_link(0.5, 0.5)
    grid = GridSpec(delta_p=0.25, delta_r=TAU, radius=1.0)
    return build_irm(build_rm(model, grid))


def test_build_graph_unreachable_names_waypoint(planar_irm):
    with pytest.raises(UnreachableWaypoint) as ei:
        build_graph(planar_irm, [P(0, 0, 5.0), P(1, 0, 5.0)], BaseConfig(0, 0))
    assert ei.value.index == 0


def test_build_graph_duplicate_waypoint_duplicates_layer(planar_irm):
    g = build_graph(planar_irm, [P(1, 1), P(1, 1)], BaseConfig(0, 0))
    assert len(g.layers) == 2
    assert g.layers[0].candidates == g.layers[1].candidates


def test_build_graph_counts_match_independent_queries(planar_irm):
    traj = [P(0.5, 0.5), P(1.0, 0.5), P(1.5, 0.5)]
    g = build_graph(planar_irm, traj, BaseConfig(0, 0))
    for layer, t in zip(g.layers, traj):
        assert len(layer.candidates) == len(query_irm(planar_irm, t))


# ----------------------------------------------------------------- search


def _graph_from_arrays(layer_pts, start=(0.0, 0.0)):
    layers = []
    for i, pts in enumerate(layer_pts):
        cands = [BaseCandidate(float(x), float(y), (0.0, 0.0), 1.0) for x, y in pts]
        layers.append(Layer(waypoint_index=i, target=P(0, 0), candidates=cands))
    return LayeredGraph(layers=layers, start=BaseConfig(*start))


def _naive_cost(nodes, start, w_len=1.0, w_smooth=1.0, anchor=True):
    """Independent re-statement of the objective: chord lengths plus norms of
    second differences, start pose prepended as virtual predecessor."""
    seq = [np.asarray(start, float)] + [np.asarray(n, float) for n in nodes]
    c = math.dist(seq[0], seq[1]) * w_len if anchor else 0.0
    for i in range(1, len(seq) - 1):
        c += w_len * math.dist(seq[i], seq[i + 1])
        d2 = seq[i + 1] - 2 * seq[i] + seq[i - 1]
        c += w_smooth * math.hypot(d2[0], d2[1])
    return c


def _brute_force(layer_pts, start, w_len=1.0, w_smooth=1.0, anchor=True):
    best = math.inf
    for combo in itertools.product(*[range(len(p)) for p in layer_pts]):
        nodes = [layer_pts[i][j] for i, j in enumerate(combo)]
        best = min(best, _naive_cost(nodes, start, w_len, w_smooth, anchor))
    return best


def test_search_single_chain():
    g = _graph_from_arrays([[(1.0, 0.0)], [(2.0, 0.0)]], start=(0.0, 0.0))
    path = search(g)
    assert [(n.x, n.y) for n in path.nodes] == [(1.0, 0.0), (2.0, 0.0)]
    # anchor length 1 + step length 1 + collinear smoothness 0
    assert path.total_cost == pytest.approx(2.0)


def test_exact_search_matches_brute_force_small_graphs():
    rng = np.random.default_rng(42)
    for _ in range(60):
        n_layers = rng.integers(2, 5)
        pts = [rng.uniform(-2, 2, (rng.integers(1, 5), 2)).tolist() for _ in range(n_layers)]
        start = tuple(rng.uniform(-2, 2, 2))
        path, _ = dijkstra_dp(_graph_from_arrays(pts, start), exact_smoothness=True)
        assert path.total_cost == pytest.approx(_brute_force(pts, start), abs=1e-12)


def test_literal_search_is_self_consistent_and_bounded_below():
    rng = np.random.default_rng(43)
    for _ in range(60):
        n_layers = rng.integers(2, 6)
        pts = [rng.uniform(-2, 2, (rng.integers(1, 5), 2)).tolist() for _ in range(n_layers)]
        start = tuple(rng.uniform(-2, 2, 2))
        g = _graph_from_arrays(pts, start)
        path = search(g)
        nodes = [(n.x, n.y) for n in path.nodes]
        # accumulated cost equals the objective of the returned sequence
        assert path.total_cost == pytest.approx(_naive_cost(nodes, start), abs=1e-9)
        # and can never beat the true optimum
        assert path.total_cost >= _brute_force(pts, start) - 1e-9


def test_total_cost_matches_path_cost_helper():
    rng = np.random.default_rng(44)
    pts = [rng.uniform(-2, 2, (4, 2)).tolist() for _ in range(5)]
    g = _graph_from_arrays(pts, (0, 0))
    for exact in (False, True):
        path = search(g, exact_smoothness=exact)
        assert path.total_cost == pytest.approx(
            path_cost(path.nodes, g.start), abs=1e-9
        )


def test_corridor_tie_broken_by_smoothness():
    # two parallel candidate rows; a zig-zag and the straight row tie on the
    # smoothness-free objective only if lengths matched, so compare against
    # the best length-only path re-evaluated under the full objective
    rng = np.random.default_rng(45)
    pts = []
    for i in range(6):
        pts.append([(float(i), 0.0), (float(i), 0.6 + 0.05 * rng.uniform())])
    start = (-1.0, 0.0)
    g = _graph_from_arrays(pts, start)
    for exact in (False, True):
        full = search(g, exact_smoothness=exact)
        length_only = search(g, weights=(1.0, 0.0), exact_smoothness=exact)
        reeval = _naive_cost([(n.x, n.y) for n in length_only.nodes], start)
        assert full.total_cost <= reeval + 1e-12


def test_monotone_improvement_when_candidates_added():
    rng = np.random.default_rng(46)
    for _ in range(30):
        pts = [rng.uniform(-2, 2, (3, 2)).tolist() for _ in range(4)]
        start = tuple(rng.uniform(-1, 1, 2))
        base, _ = dijkstra_dp(_graph_from_arrays(pts, start), exact_smoothness=True)
        k = rng.integers(0, 4)
        pts[k] = pts[k] + [tuple(rng.uniform(-2, 2, 2))]
        grown, _ = dijkstra_dp(_graph_from_arrays(pts, start), exact_smoothness=True)
        assert grown.total_cost <= base.total_cost + 1e-12


def test_stale_entries_never_mutate_state():
    rng = np.random.default_rng(47)
    saw_stale = False
    for _ in range(40):
        pts = [rng.uniform(-2, 2, (5, 2)).tolist() for _ in range(5)]
        g = _graph_from_arrays(pts, tuple(rng.uniform(-1, 1, 2)))
        for exact in (False, True):
            _, stats = dijkstra_dp(g, exact_smoothness=exact)
            assert stats.mutations == stats.pushes
            assert stats.pops == stats.pushes  # every push is eventually drained
            saw_stale = saw_stale or stats.stale_pops > 0
    assert saw_stale, "expected at least one instance to exercise the stale guard"


def test_search_deterministic():
    rng = np.random.default_rng(48)
    pts = [rng.uniform(-2, 2, (4, 2)).tolist() for _ in range(5)]
    g = _graph_from_arrays(pts, (0, 0))
    p1, p2 = search(g), search(g)
    assert p1.nodes == p2.nodes and p1.total_cost == p2.total_cost


def test_pipeline_scale_search_on_real_layers(planar_irm):
    traj = [P(0.2 * i, 0.3) for i in range(10)]
    g = build_graph(planar_irm, traj, BaseConfig(-0.5, 0.0))
    path = search(g)
    assert len(path.nodes) == 10
    assert len(path.joints) == 10
    assert path.total_cost == pytest.approx(path_cost(path.nodes, g.start), abs=1e-9)
