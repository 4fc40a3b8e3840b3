import math

import numpy as np
import pytest

from irm_planner.errors import DegenerateCluster, EmptyRegionSet
from irm_planner.regions import (
    ConvexRegion,
    build_regions,
    cluster,
    convex_hull,
    filter_points,
    has_hole,
    sd_gradient,
    signed_distance,
)


def grid_points(nx, ny, spacing=1.0, origin=(0.0, 0.0)):
    xs = origin[0] + spacing * np.arange(nx)
    ys = origin[1] + spacing * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def ring_points(outer=6, thickness=2, spacing=1.0):
    """Square annulus on a grid: outer x outer minus the hollow middle."""
    pts = []
    for i in range(outer):
        for j in range(outer):
            if thickness <= i < outer - thickness and thickness <= j < outer - thickness:
                continue
            pts.append((i * spacing, j * spacing))
    return np.array(pts)


# ---------------------------------------------------------------- filtering


def test_filter_three_by_three_grid():
    pts = grid_points(3, 3, spacing=0.5)
    kept = filter_points(pts, delta_g=0.5)
    kept_set = set(map(tuple, kept))
    # corners have exactly 2 axis neighbors and must go; the plus-shape stays
    assert (0.0, 0.0) not in kept_set
    assert (0.5, 0.5) in kept_set
    assert len(kept) == 5


def test_filter_isolated_point_removed():
    pts = np.array([[0.0, 0.0], [10.0, 10.0], [10.5, 10.0], [10.0, 10.5], [10.5, 10.5]])
    kept = filter_points(pts, delta_g=0.5)
    assert (0.0, 0.0) not in set(map(tuple, kept))


def test_filter_empty_input():
    assert filter_points(np.zeros((0, 2)), 0.5).shape == (0, 2)


# --------------------------------------------------------------- clustering


def test_cluster_separated_blocks():
    a = grid_points(2, 2, spacing=0.5)
    b = grid_points(2, 2, spacing=0.5, origin=(20.0, 0.0))
    comps = cluster(np.vstack([a, b]), link_radius=0.75)
    assert len(comps) == 2
    assert min(map(tuple, comps[0])) < min(map(tuple, comps[1]))


def test_cluster_chain_is_single_component():
    pts = np.array([[0.1 * i, 0.0] for i in range(30)])
    assert len(cluster(pts, link_radius=0.15)) == 1


def _union_find_components(pts, radius):
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.linalg.norm(pts[i] - pts[j]) <= radius * (1 + 1e-9):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(pts)):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(sorted(g)) for g in groups.values())


def test_cluster_matches_union_find_oracle():
    rng = np.random.default_rng(10)
    for _ in range(25):
        pts = rng.uniform(0, 4, size=(rng.integers(5, 60), 2))
        radius = rng.uniform(0.2, 1.0)
        comps = cluster(pts, radius)
        got = sorted(
            tuple(sorted(int(np.nonzero((pts == p).all(axis=1))[0][0]) for p in comp))
            for comp in comps
        )
        assert got == _union_find_components(pts, radius)


# ------------------------------------------------------------------- hulls


def test_hull_of_square_with_interior_points():
    pts = np.array(
        [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.8], [0.5, 0.0], [1.0, 0.5]]
    )
    hull = convex_hull(pts)
    assert set(hull.vertices) == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert hull.area() == pytest.approx(1.0)


def test_hull_vertices_ccw_strict():
    rng = np.random.default_rng(11)
    for _ in range(40):
        pts = rng.uniform(-1, 1, size=(rng.integers(3, 40), 2))
        try:
            hull = convex_hull(pts)
        except DegenerateCluster:
            continue
        v = hull.vertex_array
        m = len(v)
        for i in range(m):
            a, b, c = v[i], v[(i + 1) % m], v[(i + 2) % m]
            assert (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0


def test_hull_contains_all_inputs():
    rng = np.random.default_rng(12)
    for _ in range(40):
        pts = rng.uniform(-2, 2, size=(30, 2))
        hull = convex_hull(pts)
        for p in pts:
            assert signed_distance(hull, p) >= -1e-12


def test_hull_collinear_rejected():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(DegenerateCluster):
        convex_hull(pts)


# ----------------------------------------------------------- hole detection


def test_filled_grid_has_no_hole():
    pts = grid_points(6, 6, spacing=0.5)
    hull = convex_hull(pts)
    assert has_hole(hull, pts, delta_g=0.5) is False


def test_square_ring_has_hole():
    pts = ring_points(outer=7, thickness=2, spacing=0.5)
    hull = convex_hull(pts)
    assert has_hole(hull, pts, delta_g=0.5) is True


def test_thin_sliver_has_no_hole():
    pts = np.array([[0.0, 0.0], [2.0, 0.011], [4.0, 0.0]])
    hull = convex_hull(pts)
    assert has_hole(hull, pts, delta_g=0.5) is False


# ------------------------------------------------------------ build_regions


def test_dense_rectangle_gives_single_hull():
    pts = grid_points(9, 5, spacing=0.5)
    rs = build_regions(pts, delta_g=0.5, n_min=5)
    assert len(rs.regions) == 1
    area = rs.regions[0].area()
    # filtering peels at most a one-cell band off the 4.0 x 2.0 bounding box
    assert 1.0 * 3.0 <= area <= 4.0 * 2.0 + 1e-9


def test_annulus_splits_into_hole_free_cover():
    pts = ring_points(outer=10, thickness=3, spacing=0.5)
    rs = build_regions(pts, delta_g=0.5, n_min=5)
    assert len(rs.regions) >= 2
    filtered = filter_points(pts, 0.5)
    for p in filtered:
        assert max(signed_distance(r, p) for r in rs.regions) >= -1e-9
    for r in rs.regions:
        inside = [p for p in filtered if signed_distance(r, p) >= -1e-9]
        assert has_hole(r, np.array(inside), 0.5) is False


def test_sparse_points_raise_empty():
    pts = np.array([[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]])
    with pytest.raises(EmptyRegionSet):
        build_regions(pts, delta_g=0.5, n_min=5)


# -------------------------------------------------------------- signed dist


@pytest.fixture
def unit_square():
    return ConvexRegion(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))


def test_sd_center_of_unit_square(unit_square):
    assert signed_distance(unit_square, (0.5, 0.5)) == pytest.approx(0.5)


def test_sd_outside_unit_square(unit_square):
    assert signed_distance(unit_square, (2.0, 0.5)) == pytest.approx(-1.0)


def test_sd_on_boundary(unit_square):
    assert signed_distance(unit_square, (1.0, 0.5)) == pytest.approx(0.0, abs=1e-15)


def test_sd_outside_near_vertex(unit_square):
    assert signed_distance(unit_square, (2.0, 2.0)) == pytest.approx(-math.sqrt(2))
    g = sd_gradient(unit_square, (2.0, 2.0))
    assert np.allclose(g, (-math.sqrt(0.5), -math.sqrt(0.5)))


def test_sd_gradient_matches_finite_differences():
    rng = np.random.default_rng(13)
    hull = convex_hull(rng.uniform(-1, 1, size=(25, 2)))
    h = 1e-7
    checked = 0
    for _ in range(200):
        p = rng.uniform(-2, 2, 2)
        sd = signed_distance(hull, p)
        if abs(sd) < 1e-3:  # skip the boundary kink itself
            continue
        gx, gy = sd_gradient(hull, p)
        fx = (signed_distance(hull, p + [h, 0]) - signed_distance(hull, p - [h, 0])) / (2 * h)
        fy = (signed_distance(hull, p + [0, h]) - signed_distance(hull, p - [0, h])) / (2 * h)
        if abs(fx - gx) > 1e-5 or abs(fy - gy) > 1e-5:
            # medial-axis and vertex-shadow points are genuinely non-smooth;
            # tolerate only if a nudge confirms a feature tie
            sd2 = signed_distance(hull, p + rng.normal(0, 1e-6, 2))
            assert abs(sd2 - sd) < 1e-5
            continue
        checked += 1
    assert checked >= 100


def test_sd_is_one_lipschitz(unit_square):
    rng = np.random.default_rng(14)
    for _ in range(200):
        p, q = rng.uniform(-2, 3, 2), rng.uniform(-2, 3, 2)
        dsd = abs(signed_distance(unit_square, p) - signed_distance(unit_square, q))
        assert dsd <= np.linalg.norm(p - q) + 1e-12
