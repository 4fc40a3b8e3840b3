"""Stage Two: continuous base-path refinement.

The discrete path becomes the start point of an unconstrained minimization
of length + smoothness + reachability penalty, where each node carries the
convex region it must stay inside and the penalty exp(alpha * max(0, -sd))
is flat inside the region and grows exponentially with violation depth.
Minimization uses a limited-memory BFGS two-loop recursion with Armijo
backtracking; the first node stays anchored and nodes of layers without
regions are pinned to their discrete placements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import BaseConfig, DiscretePath
from .regions import RegionSet, sd_gradient, signed_distance

_CURVATURE_FLOOR = 1e-10  # reject (s, y) pairs that would break positive definiteness

# math.exp overflows past ~709.8; an infinite cost is the correct Armijo
# verdict for absurd trial points, while the gradient keeps a finite clamp
_EXP_OVERFLOW = 700.0


@dataclass
class _StackedRegions:
    """Per-node bound-region geometry padded to a common edge count, so one
    vectorized pass yields every node's signed distance and its gradient."""

    V: np.ndarray  # (N, M, 2) edge start vertices
    E: np.ndarray  # (N, M, 2) edge vectors
    N_IN: np.ndarray  # (N, M, 2) inward unit normals
    ELEN2: np.ndarray  # (N, M) squared edge lengths
    pad: np.ndarray  # (N, M) True where padding
    bound: np.ndarray  # (N,) False for pinned nodes

    def sd_and_grad(self, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rel = nodes[:, None, :] - self.V
        depth = np.einsum("nmk,nmk->nm", rel, self.N_IN)
        depth = np.where(self.pad, np.inf, depth)
        d_idx = np.argmin(depth, axis=1)
        d_min = depth[np.arange(len(nodes)), d_idx]
        inside = d_min >= 0.0

        t = np.einsum("nmk,nmk->nm", rel, self.E) / self.ELEN2
        np.clip(t, 0.0, 1.0, out=t)
        proj = self.V + t[..., None] * self.E
        diff = nodes[:, None, :] - proj
        seg_d = np.sqrt(np.einsum("nmk,nmk->nm", diff, diff))
        seg_d = np.where(self.pad, np.inf, seg_d)
        s_idx = np.argmin(seg_d, axis=1)
        rows = np.arange(len(nodes))
        s_min = seg_d[rows, s_idx]

        sd = np.where(inside, d_min, -s_min)

        grad = np.where(
            inside[:, None],
            self.N_IN[rows, d_idx],
            (proj[rows, s_idx] - nodes) / np.where(s_min[:, None] > 0, s_min[:, None], 1.0),
        )
        sd = np.where(self.bound, sd, np.inf)  # pinned nodes never incur penalty
        return sd, grad


def _stack_regions(regions, binding) -> _StackedRegions:
    polys = []
    for rs, b in zip(regions, binding):
        polys.append(None if b is None else rs.regions[b].vertex_array)
    m_max = max((len(p) for p in polys if p is not None), default=1)
    n = len(polys)
    V = np.zeros((n, m_max, 2))
    E = np.ones((n, m_max, 2))
    N_IN = np.zeros((n, m_max, 2))
    pad = np.ones((n, m_max), dtype=bool)
    bound = np.zeros(n, dtype=bool)
    for i, p in enumerate(polys):
        if p is None:
            continue
        m = len(p)
        e = np.roll(p, -1, axis=0) - p
        elen = np.linalg.norm(e, axis=1)
        V[i, :m] = p
        E[i, :m] = e
        N_IN[i, :m] = np.stack([-e[:, 1], e[:, 0]], axis=1) / elen[:, None]
        pad[i, :m] = False
        bound[i] = True
    return _StackedRegions(
        V=V, E=E, N_IN=N_IN, ELEN2=np.einsum("nmk,nmk->nm", E, E), pad=pad, bound=bound
    )


@dataclass
class RefineProblem:
    initial: DiscretePath
    regions: list[RegionSet | None]
    binding: list[int | None]
    alpha: float
    weights: tuple[float, float]
    anchor: BaseConfig
    free_idx: list[int]
    stacked: _StackedRegions

    @property
    def n_nodes(self) -> int:
        return len(self.initial.nodes)

    def nodes0(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.initial.nodes])

    def pack(self, nodes: np.ndarray) -> np.ndarray:
        return nodes[self.free_idx].ravel()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        nodes = self.nodes0()
        nodes[self.free_idx] = x.reshape(-1, 2)
        return nodes


@dataclass
class RefineResult:
    path: list[BaseConfig]
    final_cost: float
    iterations: int
    converged: bool
    gradient_norm: float
    cost_trace: list[float] = field(default_factory=list)


def bind_regions(
    initial: DiscretePath, regions: list[RegionSet | None]
) -> list[int | None]:
    """Pick, per node, the deepest-containing region of its layer (largest
    signed distance; for fully-outside nodes that is also the nearest one).
    Layers without regions yield None, pinning the node."""
    binding: list[int | None] = []
    for node, rs in zip(initial.nodes, regions):
        if rs is None or not rs.regions:
            binding.append(None)
            continue
        sds = [signed_distance(r, (node.x, node.y)) for r in rs.regions]
        binding.append(int(np.argmax(sds)))
    return binding


def make_problem(
    initial: DiscretePath,
    regions: list[RegionSet | None],
    alpha: float = 50.0,
    weights: tuple[float, float] = (1.0, 1.0),
    anchor_end: bool = False,
) -> RefineProblem:
    if len(regions) != len(initial.nodes):
        raise ValueError("need one region set (or None) per path node")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    binding = bind_regions(initial, regions)
    last = len(initial.nodes) - 1
    free = [
        i
        for i in range(1, len(initial.nodes))
        if binding[i] is not None and not (anchor_end and i == last)
    ]
    return RefineProblem(
        initial=initial,
        regions=regions,
        binding=binding,
        alpha=alpha,
        weights=weights,
        anchor=initial.nodes[0],
        free_idx=free,
        stacked=_stack_regions(regions, binding),
    )


def _node_region(prob: RefineProblem, i: int):
    b = prob.binding[i]
    return None if b is None else prob.regions[i].regions[b]


def total_cost(x: np.ndarray, prob: RefineProblem) -> float:
    """w_len * sum of chord lengths + w_smooth * sum of second-difference
    norms + one exp penalty per node (constant 1 when feasible)."""
    nodes = prob.unpack(np.asarray(x, dtype=float))
    w_len, w_smooth = prob.weights
    chords = np.diff(nodes, axis=0)
    cost = w_len * float(np.linalg.norm(chords, axis=1).sum())
    if len(nodes) >= 3:
        d2 = nodes[2:] - 2 * nodes[1:-1] + nodes[:-2]
        cost += w_smooth * float(np.linalg.norm(d2, axis=1).sum())
    sd, _ = prob.stacked.sd_and_grad(nodes)
    violation = prob.alpha * np.maximum(0.0, -sd)  # inf sd from pinned nodes -> 0
    if np.any(violation >= _EXP_OVERFLOW):
        return math.inf
    return cost + float(np.exp(violation).sum())


def total_gradient(x: np.ndarray, prob: RefineProblem) -> np.ndarray:
    nodes = prob.unpack(np.asarray(x, dtype=float))
    w_len, w_smooth = prob.weights
    n = len(nodes)
    g = np.zeros_like(nodes)

    chords = np.diff(nodes, axis=0)
    lens = np.linalg.norm(chords, axis=1)
    ok = lens > 0.0  # subgradient choice 0 at coincident nodes
    u = np.zeros_like(chords)
    u[ok] = chords[ok] / lens[ok, None]
    np.subtract.at(g, np.arange(n - 1), w_len * u)
    np.add.at(g, np.arange(1, n), w_len * u)

    if n >= 3:
        d2 = nodes[2:] - 2 * nodes[1:-1] + nodes[:-2]
        d2n = np.linalg.norm(d2, axis=1)
        ok2 = d2n > 0.0
        v = np.zeros_like(d2)
        v[ok2] = w_smooth * d2[ok2] / d2n[ok2, None]
        np.add.at(g, np.arange(n - 2), v)
        np.add.at(g, np.arange(1, n - 1), -2 * v)
        np.add.at(g, np.arange(2, n), v)

    sd, sd_g = prob.stacked.sd_and_grad(nodes)
    viol = sd < 0.0
    if np.any(viol):
        expo = np.minimum(prob.alpha * (-sd[viol]), _EXP_OVERFLOW)
        scale = -prob.alpha * np.exp(expo)
        g[viol] += scale[:, None] * sd_g[viol]

    return g[prob.free_idx].ravel()


def lbfgs(
    fun,
    grad,
    x0: np.ndarray,
    max_iter: int = 500,
    grad_tol: float = 1e-6,
    history: int = 8,
    armijo_c1: float = 1e-4,
    max_halvings: int = 40,
):
    """Two-loop-recursion L-BFGS with Armijo backtracking.

    Returns (x, f, iterations, converged, grad_norm, cost_trace). When the
    quasi-Newton direction fails its line search, one steepest-descent step
    is attempted and the curvature history is dropped; if that fails too the
    iteration stops at the best point found.
    """
    x = np.asarray(x0, dtype=float).copy()
    f = fun(x)
    g = grad(x)
    trace = [f]
    pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
    converged = False
    it = 0

    def two_loop(gv):
        q = gv.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if pairs:
            s, y, _ = pairs[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q

    def line_search(d):
        slope = float(g @ d)
        if slope >= 0.0:
            return None
        t = 1.0
        for _ in range(max_halvings):
            x_new = x + t * d
            f_new = fun(x_new)
            if f_new <= f + armijo_c1 * t * slope:
                return t, x_new, f_new
            t *= 0.5
        return None

    while it < max_iter:
        gnorm = float(np.linalg.norm(g))
        if gnorm < grad_tol:
            converged = True
            break
        it += 1
        d = two_loop(g) if pairs else -g
        hit = line_search(d)
        if hit is None and pairs:
            hit = line_search(-g)
            pairs.clear()
        if hit is None:
            break  # non-smooth stationary point; keep the best iterate
        _, x_new, f_new = hit
        g_new = grad(x_new)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > _CURVATURE_FLOOR * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > history:
                pairs.pop(0)
        x, f, g = x_new, f_new, g_new
        trace.append(f)

    return x, f, it, converged, float(np.linalg.norm(g)), trace


def _snap_to_boundary(prob: RefineProblem, nodes: np.ndarray) -> np.ndarray:
    """Move any violating free node onto the nearest boundary point of its
    region; with the exponential penalty this is always a descent step."""
    for i in prob.free_idx:
        region = _node_region(prob, i)
        if region is None:
            continue
        if signed_distance(region, nodes[i]) < 0.0:
            sd = signed_distance(region, nodes[i])
            gx, gy = sd_gradient(region, nodes[i])
            nodes[i] = nodes[i] + (-sd) * np.array([gx, gy])
    return nodes


def lbfgs_minimize(
    prob: RefineProblem,
    max_iter: int = 500,
    grad_tol: float = 1e-6,
    history: int = 8,
    feasibility_snap: bool = True,
) -> RefineResult:
    """Refine the discrete path; non-convergence is a result state, not an error."""
    x0 = prob.pack(prob.nodes0())
    if len(x0) == 0:
        f0 = total_cost(x0, prob)
        return RefineResult(
            path=list(prob.initial.nodes),
            final_cost=f0,
            iterations=0,
            converged=True,
            gradient_norm=0.0,
            cost_trace=[f0],
        )
    x, f, it, converged, gnorm, trace = lbfgs(
        lambda v: total_cost(v, prob),
        lambda v: total_gradient(v, prob),
        x0,
        max_iter=max_iter,
        grad_tol=grad_tol,
        history=history,
    )
    nodes = prob.unpack(x)
    if feasibility_snap:
        nodes = _snap_to_boundary(prob, nodes)
        f = total_cost(prob.pack(nodes), prob)
    path = [BaseConfig(float(px), float(py)) for px, py in nodes]
    return RefineResult(
        path=path,
        final_cost=f,
        iterations=it,
        converged=converged,
        gradient_norm=gnorm,
        cost_trace=trace,
    )
