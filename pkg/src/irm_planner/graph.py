"""Stage One: layered-graph search over per-waypoint base candidates.

The task path is resampled by arc length, each waypoint is expanded into its
feasible base placements via the inverse reachability map, and the cheapest
layer-respecting sequence is extracted with a priority-queue DP. The edge
cost couples Euclidean step length with the norm of the discrete second
difference, so the smoothness term needs a predecessor: the default search
evaluates it through the recorded best predecessor of the tail node, which
keeps the state one node wide but can miss the true three-point optimum.
``exact_smoothness=True`` lifts the state to (node, predecessor) pairs and is
optimal for the full objective.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .arm import Pose6, normalize_angle, wrap_diff
from .errors import InputError, UnreachableWaypoint
from .irm import BaseCandidate, InverseReachabilityMap, query_irm


@dataclass(frozen=True)
class BaseConfig:
    x: float
    y: float

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class Layer:
    waypoint_index: int
    target: Pose6
    candidates: list[BaseCandidate]


@dataclass
class LayeredGraph:
    layers: list[Layer]
    start: BaseConfig

    def xy(self, i: int) -> np.ndarray:
        return np.array([[c.x, c.y] for c in self.layers[i].candidates])


@dataclass
class DiscretePath:
    nodes: list[BaseConfig]
    joints: list[tuple[float, ...]]
    total_cost: float


@dataclass
class SearchStats:
    pops: int = 0
    stale_pops: int = 0
    pushes: int = 0
    relaxations: int = 0
    mutations: int = 0  # cost-table writes; equals pushes iff stale pops never mutate


def discretize_trajectory(poses: list[Pose6], ds: float) -> list[Pose6]:
    """Arc-length resampling of the pose polyline at spacing ds.

    Positions are interpolated linearly along the polyline; each Euler
    component is interpolated along its shortest wrap. Both endpoints are
    kept exactly; the final spacing may be shorter than ds.
    """
    if len(poses) < 2:
        raise InputError("trajectory needs at least 2 poses")
    if ds <= 0:
        raise InputError("sample spacing ds must be positive")
    pts = np.array([p.position for p in poses])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0.0:
        raise InputError("trajectory has zero total length")
    cum = np.concatenate([[0.0], np.cumsum(seg)])

    n_steps = int(math.floor(total / ds + 1e-9))
    stations = [k * ds for k in range(n_steps + 1)]
    if total - stations[-1] > 1e-9 * max(1.0, total):
        stations.append(total)

    out = [poses[0]]
    for s in stations[1:-1]:
        j = int(np.searchsorted(cum, s, side="right") - 1)
        j = min(j, len(seg) - 1)
        while seg[j] == 0.0 and j + 1 < len(seg):  # skip duplicate vertices
            j += 1
        t = (s - cum[j]) / seg[j]
        a, b = poses[j], poses[j + 1]
        pos = (1 - t) * pts[j] + t * pts[j + 1]
        ang = [
            normalize_angle(ai + t * wrap_diff(bi, ai))
            for ai, bi in zip(a.angles, b.angles)
        ]
        out.append(Pose6(float(pos[0]), float(pos[1]), float(pos[2]), *ang))
    out.append(poses[-1])
    return out


def path_length_cost(a: BaseConfig, b: BaseConfig) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def smoothness_cost(prev: BaseConfig, cur: BaseConfig, nxt: BaseConfig) -> float:
    return math.hypot(nxt.x - 2 * cur.x + prev.x, nxt.y - 2 * cur.y + prev.y)


def build_graph(
    irm: InverseReachabilityMap,
    trajectory: list[Pose6],
    start: BaseConfig,
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> LayeredGraph:
    layers = []
    for i, target in enumerate(trajectory):
        cands = query_irm(irm, target, mount_offset)
        cands = _dedupe_max_mu(cands)
        if not cands:
            raise UnreachableWaypoint(i)
        layers.append(Layer(waypoint_index=i, target=target, candidates=cands))
    return LayeredGraph(layers=layers, start=start)


def _dedupe_max_mu(cands: list[BaseCandidate]) -> list[BaseCandidate]:
    """Collapse duplicate base cells, keeping the highest-dexterity entry."""
    best: dict[tuple[float, float], BaseCandidate] = {}
    for c in cands:
        key = (c.x, c.y)
        if key not in best or c.mu > best[key].mu:
            best[key] = c
    return [best[k] for k in sorted(best)]


def dijkstra_dp(
    graph: LayeredGraph,
    weights: tuple[float, float] = (1.0, 1.0),
    anchor_start: bool = True,
    exact_smoothness: bool = False,
) -> tuple[DiscretePath, SearchStats]:
    """Minimum-cost node sequence through the layers.

    The start configuration acts as the smoothness predecessor of layer 0
    and, when anchor_start is set, also contributes the approach length to
    the first-layer init. Ties are broken toward lower (layer, candidate)
    indices through the queue ordering.
    """
    if exact_smoothness:
        return _search_exact(graph, weights, anchor_start)
    return _search_literal(graph, weights, anchor_start)


def search(
    graph: LayeredGraph,
    weights: tuple[float, float] = (1.0, 1.0),
    anchor_start: bool = True,
    exact_smoothness: bool = False,
) -> DiscretePath:
    path, _ = dijkstra_dp(graph, weights, anchor_start, exact_smoothness)
    return path


def _edge_costs(xy_next, cur, prev, w_len, w_smooth):
    return w_len * np.linalg.norm(xy_next - cur, axis=1) + w_smooth * np.linalg.norm(
        xy_next - 2 * cur + prev, axis=1
    )


def _search_literal(graph, weights, anchor_start):
    w_len, w_smooth = weights
    N = len(graph.layers)
    xy = [graph.xy(i) for i in range(N)]
    start = graph.start.to_array()

    C = [np.full(len(L.candidates), np.inf) for L in graph.layers]
    P = [np.full(len(L.candidates), -1, dtype=int) for L in graph.layers]
    stats = SearchStats()
    pq: list[tuple[float, int, int]] = []
    for j in range(len(xy[0])):
        C[0][j] = w_len * np.linalg.norm(xy[0][j] - start) if anchor_start else 0.0
        stats.mutations += 1
        heapq.heappush(pq, (C[0][j], 0, j))
        stats.pushes += 1

    while pq:
        c_head, i, j = heapq.heappop(pq)
        stats.pops += 1
        if c_head > C[i][j]:
            stats.stale_pops += 1
            continue
        if i >= N - 1:
            continue
        prev = start if i == 0 else xy[i - 1][P[i][j]]
        new_costs = C[i][j] + _edge_costs(xy[i + 1], xy[i][j], prev, w_len, w_smooth)
        stats.relaxations += len(new_costs)
        improved = np.nonzero(new_costs < C[i + 1])[0]
        for k in improved:
            C[i + 1][k] = new_costs[k]
            P[i + 1][k] = j
            stats.mutations += 1
            heapq.heappush(pq, (new_costs[k], i + 1, int(k)))
            stats.pushes += 1

    j = int(np.argmin(C[N - 1]))
    total = float(C[N - 1][j])
    idxs = [j]
    for i in range(N - 1, 0, -1):
        j = int(P[i][j])
        idxs.append(j)
    idxs.reverse()
    return _make_path(graph, idxs, total), stats


def _search_exact(graph, weights, anchor_start):
    # state (i, j, p): at layer i node j, reached from node p of layer i-1
    # (p = 0 and width 1 for the virtual start in front of layer 0)
    w_len, w_smooth = weights
    N = len(graph.layers)
    xy = [graph.xy(i) for i in range(N)]
    start = graph.start.to_array()

    widths = [1] + [len(L.candidates) for L in graph.layers[:-1]]
    C = [np.full((len(graph.layers[i].candidates), widths[i]), np.inf) for i in range(N)]
    P = [np.full_like(C[i], -1, dtype=int) for i in range(N)]
    stats = SearchStats()
    pq: list[tuple[float, int, int, int]] = []
    for j in range(len(xy[0])):
        C[0][j, 0] = w_len * np.linalg.norm(xy[0][j] - start) if anchor_start else 0.0
        stats.mutations += 1
        heapq.heappush(pq, (C[0][j, 0], 0, j, 0))
        stats.pushes += 1

    while pq:
        c_head, i, j, p = heapq.heappop(pq)
        stats.pops += 1
        if c_head > C[i][j, p]:
            stats.stale_pops += 1
            continue
        if i >= N - 1:
            continue
        prev = start if i == 0 else xy[i - 1][p]
        new_costs = c_head + _edge_costs(xy[i + 1], xy[i][j], prev, w_len, w_smooth)
        stats.relaxations += len(new_costs)
        improved = np.nonzero(new_costs < C[i + 1][:, j])[0]
        for k in improved:
            C[i + 1][k, j] = new_costs[k]
            P[i + 1][k, j] = p
            stats.mutations += 1
            heapq.heappush(pq, (new_costs[k], i + 1, int(k), j))
            stats.pushes += 1

    flat = int(np.argmin(C[N - 1]))
    j, p = divmod(flat, C[N - 1].shape[1])
    total = float(C[N - 1][j, p])
    idxs = [j]
    for i in range(N - 1, 0, -1):
        j, p = p, int(P[i][j, p])
        idxs.append(j)
    idxs.reverse()
    return _make_path(graph, idxs, total), stats


def _make_path(graph: LayeredGraph, idxs: list[int], total: float) -> DiscretePath:
    nodes, joints = [], []
    for layer, j in zip(graph.layers, idxs):
        c = layer.candidates[j]
        nodes.append(BaseConfig(c.x, c.y))
        joints.append(c.q)
    return DiscretePath(nodes=nodes, joints=joints, total_cost=total)


def path_cost(
    nodes: list[BaseConfig],
    start: BaseConfig,
    weights: tuple[float, float] = (1.0, 1.0),
    anchor_start: bool = True,
) -> float:
    """Objective value of a concrete node sequence, with the start pose as
    the virtual smoothness predecessor of the first node."""
    w_len, w_smooth = weights
    seq = [start] + nodes
    total = w_len * path_length_cost(seq[0], seq[1]) if anchor_start else 0.0
    for i in range(1, len(seq) - 1):
        total += w_len * path_length_cost(seq[i], seq[i + 1])
        total += w_smooth * smoothness_cost(seq[i - 1], seq[i], seq[i + 1])
    return total
