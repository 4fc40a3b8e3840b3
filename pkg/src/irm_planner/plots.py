"""Figure emission: four SVG plots per completed plan.

Rendering is byte-deterministic: a fixed svg.hashsalt pins the generated
element ids and the date metadata is suppressed, so identical inputs give
identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import PlannerError

_SALT = "irm-planner"

_CLUSTER_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:purple", "tab:brown", "tab:cyan"]


def _new_fig(ncols=1, nrows=1, size=(6.0, 4.5)):
    plt.rcParams["svg.hashsalt"] = _SALT
    fig, axes = plt.subplots(nrows, ncols, figsize=size)
    return fig, axes


def _save(fig, path: Path) -> Path:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise PlannerError(f"cannot write plot {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def _path_xy(nodes):
    return np.array([[n.x, n.y] for n in nodes])


def plot_layered_graph(result, path: Path) -> Path:
    fig, ax = _new_fig()
    for layer in result.graph.layers:
        pts = np.array([[c.x, c.y] for c in layer.candidates])
        ax.scatter(pts[:, 0], pts[:, 1], s=2, color="0.85", zorder=1)
    task = np.array([[t.x, t.y] for t in result.trajectory])
    ax.plot(task[:, 0], task[:, 1], "-", color="tab:green", lw=1.0, label="task path")
    d = _path_xy(result.discrete.nodes)
    ax.plot(d[:, 0], d[:, 1], "o-", color="tab:blue", ms=3, lw=1.2, label="discrete base path")
    ax.plot(result.graph.start.x, result.graph.start.y, "k*", ms=10, label="start")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("layered graph: candidates and selected base path")
    return _save(fig, path)


def plot_region_extraction(result, path: Path) -> Path:
    fig, axes = _new_fig(2, 2, size=(8.0, 7.0))
    axes = axes.ravel()
    i = len(result.graph.layers) // 2
    trace = result.traces[i]
    rs = result.regions[i]

    ax = axes[0]
    if trace is not None and len(trace.initial):
        ax.scatter(trace.initial[:, 0], trace.initial[:, 1], s=4, color="tab:blue")
    ax.set_title(f"initial candidate set (layer {i})")

    ax = axes[1]
    if trace is not None:
        for k, comp in enumerate(trace.clusters):
            ax.scatter(comp[:, 0], comp[:, 1], s=4, color=_CLUSTER_COLORS[k % len(_CLUSTER_COLORS)])
    ax.set_title("filtered points, connectivity clusters")

    ax = axes[2]
    if trace is not None:
        for k, comp in enumerate(trace.clusters):
            ax.scatter(comp[:, 0], comp[:, 1], s=2, color="0.8")
        for hull, holed in trace.first_hulls:
            if hull is None:
                continue
            v = np.vstack([hull.vertex_array, hull.vertex_array[:1]])
            style = "r--" if holed else "g-"
            ax.plot(v[:, 0], v[:, 1], style, lw=1.2)
    ax.set_title("first hulls (dashed: cavity detected)")

    ax = axes[3]
    if rs is None:
        ax.text(0.5, 0.5, "pinned", ha="center", va="center", transform=ax.transAxes)
    else:
        for r in rs.regions:
            v = np.vstack([r.vertex_array, r.vertex_array[:1]])
            ax.fill(v[:, 0], v[:, 1], alpha=0.25, color="tab:green")
            ax.plot(v[:, 0], v[:, 1], "-", color="tab:green", lw=1.2)
    ax.set_title("final hole-free regions")

    for ax in axes:
        ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, path)


def plot_refinement(result, path: Path) -> Path:
    fig, ax = _new_fig()
    for rs in result.regions:
        if rs is None:
            continue
        for r in rs.regions:
            v = np.vstack([r.vertex_array, r.vertex_array[:1]])
            ax.fill(v[:, 0], v[:, 1], alpha=0.03, color="tab:green", lw=0)
    d = _path_xy(result.discrete.nodes)
    r = _path_xy(result.plan.base_path)
    ax.plot(d[:, 0], d[:, 1], "o--", color="tab:blue", ms=3, lw=1.0, label="discrete")
    ax.plot(r[:, 0], r[:, 1], "o-", color="tab:red", ms=3, lw=1.2, label="refined")
    pinned = [i for i, rs in enumerate(result.regions) if rs is None]
    if pinned:
        ax.plot(d[pinned, 0], d[pinned, 1], "ks", ms=6, label="pinned")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("base path before and after refinement")
    return _save(fig, path)


def plot_cost_trace(result, path: Path) -> Path:
    fig, ax = _new_fig()
    trace = result.refine.cost_trace
    ax.plot(range(len(trace)), trace, "-", color="tab:red")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title(
        f"refinement cost ({'converged' if result.refine.converged else 'iteration limit'})"
    )
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_rm_slice(rmap, path: Path, z: float = 0.0) -> Path:
    """2D manipulability slice of a reachability map at the z bin holding z."""
    fig, ax = _new_fig(size=(5.5, 5.0))
    iz = rmap.grid.pos_index(z)
    xs, ys, mus = [], [], []
    for (ix, iy, vz, *_rest), voxel in sorted(rmap.voxels.items()):
        if vz != iz:
            continue
        xs.append(voxel.representative_pose.x)
        ys.append(voxel.representative_pose.y)
        mus.append(voxel.mu)
    if xs:
        sc = ax.scatter(xs, ys, c=mus, cmap="coolwarm", s=18, marker="s")
        fig.colorbar(sc, ax=ax, label="manipulability")
    else:
        ax.text(0.5, 0.5, "slice empty", ha="center", va="center", transform=ax.transAxes)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"reachable slice at z bin {iz} ({len(xs)} voxels)")
    return _save(fig, path)


def emit_plots(result, out_dir: Path) -> dict[str, Path]:
    """Render the four standard figures; returns name -> file path."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PlannerError(f"cannot create plot directory {out_dir}: {exc}") from exc
    return {
        "layered_graph": plot_layered_graph(result, out_dir / "layered_graph.svg"),
        "region_extraction": plot_region_extraction(result, out_dir / "region_extraction.svg"),
        "refinement": plot_refinement(result, out_dir / "refinement.svg"),
        "cost_trace": plot_cost_trace(result, out_dir / "cost_trace.svg"),
    }
