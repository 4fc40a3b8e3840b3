"""Hole-free convex region extraction from discrete candidate point sets.

Per-layer base candidates arrive as a 2D point cloud on the IRM grid. The
pipeline keeps points with more than two neighbors within the grid pitch,
splits the survivors into connectivity clusters, hulls each cluster, and
recursively bisects any cluster whose hull encloses an empty cavity until
every remaining hull is hole-free. Regions expose an exact signed distance
(positive inside) and its gradient for the refinement penalty.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCluster, EmptyRegionSet

# relative slack on radius comparisons so exact grid-pitch neighbors are not
# lost to float rounding
_RADIUS_SLACK = 1e-9


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class ConvexRegion:
    """Strictly convex CCW polygon; consecutive-edge cross products all positive."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = self.vertex_array
        m = len(v)
        if m < 3:
            raise DegenerateCluster("a convex region needs at least 3 vertices")
        for i in range(m):
            a, b, c = v[i], v[(i + 1) % m], v[(i + 2) % m]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if cross <= 0:
                raise DegenerateCluster("vertices are not in strictly convex CCW order")

    @property
    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def area(self) -> float:
        v = self.vertex_array
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class RegionSet:
    regions: list[ConvexRegion]
    layer_index: int = -1


@dataclass
class RegionTrace:
    """Intermediate artifacts of one build_regions run, kept for plotting."""

    initial: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    filtered: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    clusters: list[np.ndarray] = field(default_factory=list)
    first_hulls: list[tuple[ConvexRegion | None, bool]] = field(default_factory=list)


def filter_points(points, delta_g: float) -> np.ndarray:
    """Keep points that have strictly more than 2 neighbors within delta_g
    (L2 metric, radius inclusive, the point itself not counted)."""
    pts = _as_points(points)
    if len(pts) == 0:
        return pts
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    r2 = (delta_g * (1.0 + _RADIUS_SLACK)) ** 2
    neighbor_counts = (d2 <= r2).sum(axis=1) - 1
    return pts[neighbor_counts > 2]


def cluster(points, link_radius: float) -> list[np.ndarray]:
    """Connected components of the within-link_radius graph, ordered by their
    lexicographically smallest member."""
    pts = _as_points(points)
    n = len(pts)
    if n == 0:
        return []
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    adj = d2 <= (link_radius * (1.0 + _RADIUS_SLACK)) ** 2
    seen = np.zeros(n, dtype=bool)
    comps = []
    for i in range(n):
        if seen[i]:
            continue
        queue = deque([i])
        seen[i] = True
        members = []
        while queue:
            k = queue.popleft()
            members.append(k)
            for nb in np.nonzero(adj[k] & ~seen)[0]:
                seen[nb] = True
                queue.append(int(nb))
        comps.append(pts[sorted(members)])
    comps.sort(key=lambda c: min(map(tuple, c)))
    return comps


def convex_hull(points) -> ConvexRegion:
    """Monotone-chain hull; collinear boundary points are dropped so the
    result is strictly convex. Raises DegenerateCluster for collinear input."""
    pts = _as_points(points)
    uniq = sorted(set(map(tuple, pts)))
    if len(uniq) < 3:
        raise DegenerateCluster("fewer than 3 distinct points")

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) > 0:
                    break
                out.pop()
            out.append(p)
        return out

    lower = half(uniq)
    upper = half(list(reversed(uniq)))
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise DegenerateCluster("all points are collinear")
    return ConvexRegion(tuple(ring))


def _sd_batch(region: ConvexRegion, pts: np.ndarray) -> np.ndarray:
    """Signed distance of each point: +min boundary distance inside,
    -boundary distance outside, 0 on the boundary."""
    v = region.vertex_array
    e = np.roll(v, -1, axis=0) - v
    elen = np.linalg.norm(e, axis=1)
    n_in = np.stack([-e[:, 1], e[:, 0]], axis=1) / elen[:, None]

    rel = pts[:, None, :] - v[None, :, :]  # (n, m, 2)
    depth = np.einsum("nmk,mk->nm", rel, n_in)
    inside = np.all(depth >= 0.0, axis=1)

    t = np.clip(np.einsum("nmk,mk->nm", rel, e) / (elen**2)[None, :], 0.0, 1.0)
    proj = v[None, :, :] + t[..., None] * e[None, :, :]
    seg_d = np.linalg.norm(pts[:, None, :] - proj, axis=2)
    boundary = seg_d.min(axis=1)

    return np.where(inside, depth.min(axis=1), -boundary)


def signed_distance(region: ConvexRegion, p) -> float:
    return float(_sd_batch(region, np.asarray(p, dtype=float).reshape(1, 2))[0])


def sd_gradient(region: ConvexRegion, p) -> tuple[float, float]:
    """Unit direction of steepest signed-distance increase.

    Inside, this is the inward normal of the nearest edge; outside, the unit
    vector toward the nearest boundary feature (edge foot or vertex). On the
    boundary and at feature ties the nearest-feature rule picks one side.
    """
    p = np.asarray(p, dtype=float)
    v = region.vertex_array
    e = np.roll(v, -1, axis=0) - v
    elen = np.linalg.norm(e, axis=1)
    n_in = np.stack([-e[:, 1], e[:, 0]], axis=1) / elen[:, None]

    rel = p[None, :] - v
    depth = np.einsum("mk,mk->m", rel, n_in)
    if np.all(depth >= 0.0):
        g = n_in[int(np.argmin(depth))]
        return float(g[0]), float(g[1])

    t = np.clip(np.einsum("mk,mk->m", rel, e) / elen**2, 0.0, 1.0)
    proj = v + t[:, None] * e
    d = np.linalg.norm(p[None, :] - proj, axis=1)
    i = int(np.argmin(d))
    if d[i] < 1e-15:
        g = n_in[i]
        return float(g[0]), float(g[1])
    g = (proj[i] - p) / d[i]
    return float(g[0]), float(g[1])


def has_hole(region: ConvexRegion, points, delta_g: float) -> bool:
    """Raster the hull at pitch delta_g; a hole is a connected set of
    point-free cells strictly inside the hull with no path (through
    point-free cells) to the outside."""
    pts = _as_points(points)
    v = region.vertex_array
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    nx = int(math.ceil((hi[0] - lo[0]) / delta_g)) + 2
    ny = int(math.ceil((hi[1] - lo[1]) / delta_g)) + 2
    xs = lo[0] + (np.arange(nx) - 0.5) * delta_g
    ys = lo[1] + (np.arange(ny) - 0.5) * delta_g
    cx, cy = np.meshgrid(xs, ys, indexing="ij")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)

    if len(pts):
        d2 = np.sum((centers[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        occupied = (d2.min(axis=1) <= (delta_g * (1.0 + _RADIUS_SLACK)) ** 2).reshape(nx, ny)
    else:
        occupied = np.zeros((nx, ny), dtype=bool)
    sd = _sd_batch(region, centers).reshape(nx, ny)

    empty = ~occupied
    reached = np.zeros_like(empty)
    queue = deque()
    seeds = empty & (sd <= 0.0)
    for i, j in zip(*np.nonzero(seeds)):
        reached[i, j] = True
        queue.append((int(i), int(j)))
    while queue:
        i, j = queue.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < nx and 0 <= b < ny and empty[a, b] and not reached[a, b]:
                reached[a, b] = True
                queue.append((a, b))
    cavity = empty & (sd > 0.0) & ~reached
    return bool(cavity.any())


def _principal_split(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bisect through the centroid along the principal axis; guaranteed to
    produce two strictly smaller halves."""
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    s = centered @ axis
    left, right = pts[s <= 0.0], pts[s > 0.0]
    if len(left) == 0 or len(right) == 0:
        order = np.argsort(s, kind="stable")
        mid = len(pts) // 2
        left, right = pts[order[:mid]], pts[order[mid:]]
    return left, right


def build_regions(
    points,
    delta_g: float,
    n_min: int = 5,
    link_radius: float | None = None,
    layer_index: int = -1,
    trace: RegionTrace | None = None,
) -> RegionSet:
    """Filter, cluster, hull, and split-until-hole-free.

    Clusters that end up with n_min or fewer points (or collinear) are
    dropped. Raises EmptyRegionSet when nothing survives, which callers
    treat as "pin this layer to its discrete node".
    """
    if delta_g <= 0:
        raise ValueError("delta_g must be positive")
    if n_min < 3:
        raise ValueError("n_min must be at least 3")
    if link_radius is None:
        link_radius = 1.5 * delta_g
    pts = _as_points(points)
    filtered = filter_points(pts, delta_g)
    first_clusters = cluster(filtered, link_radius)
    if trace is not None:
        trace.initial = pts
        trace.filtered = filtered
        trace.clusters = first_clusters

    regions: list[ConvexRegion] = []
    for ci in first_clusters:
        hull_info = None
        if len(ci) > n_min:
            try:
                h = convex_hull(ci)
                hull_info = (h, has_hole(h, ci, delta_g))
            except DegenerateCluster:
                hull_info = (None, False)
        if trace is not None:
            trace.first_hulls.append(hull_info if hull_info else (None, False))
        regions.extend(_resolve(ci, delta_g, n_min, link_radius))
    if not regions:
        raise EmptyRegionSet(
            f"no region with more than {n_min} points survived filtering"
        )
    return RegionSet(regions=regions, layer_index=layer_index)


def _resolve(pts: np.ndarray, delta_g: float, n_min: int, link_radius: float):
    if len(pts) <= n_min:
        return []
    try:
        hull = convex_hull(pts)
    except DegenerateCluster:
        return []
    if not has_hole(hull, pts, delta_g):
        return [hull]
    out = []
    for half in _principal_split(pts):
        for sub in cluster(half, link_radius):
            out.extend(_resolve(sub, delta_g, n_min, link_radius))
    return out
