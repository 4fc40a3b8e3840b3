"""End-to-end planning pipeline and artifact persistence.

Stages: resample the task path, build (or reuse) the reachability and
inverse-reachability maps, expand per-waypoint base candidates into a
layered graph, extract the discrete path, convert layer candidates into
hole-free convex regions, refine the path inside them, re-solve IK on the
refined placements, and score the result. Every intermediate product can be
written as a versioned JSON artifact plus one delimited per-waypoint report.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arm import Pose6
from .config import PlannerConfig
from .errors import EmptyRegionSet, FormatError
from .graph import BaseConfig, DiscretePath, LayeredGraph, build_graph, discretize_trajectory, search
from .irm import InverseReachabilityMap, build_irm, irm_save
from .metrics import MetricsReport, PlanResult, evaluate, recompute_joints
from .reachability import build_rm, rm_save
from .refine import RefineResult, lbfgs_minimize, make_problem
from .regions import ConvexRegion, RegionSet, RegionTrace, build_regions
from .serialize import FORMAT_VERSION, dump_json, load_json, require
from .trajio import save_trajectory


@dataclass
class PipelineResult:
    config: PlannerConfig
    trajectory: list[Pose6]
    graph: LayeredGraph
    discrete: DiscretePath
    regions: list[RegionSet | None]
    traces: list[RegionTrace | None]
    refine: RefineResult
    plan: PlanResult
    discrete_plan: PlanResult
    metrics: MetricsReport
    discrete_metrics: MetricsReport
    warnings: list[str] = field(default_factory=list)
    artifacts: dict[str, Path] = field(default_factory=dict)


def layer_regions(
    graph: LayeredGraph, delta_g: float, n_min: int
) -> tuple[list[RegionSet | None], list[RegionTrace | None], list[str]]:
    """Convex regions per layer; layers too sparse to support any region
    come back as None with a warning."""
    regions: list[RegionSet | None] = []
    traces: list[RegionTrace | None] = []
    warnings = []
    for layer in graph.layers:
        pts = np.array([[c.x, c.y] for c in layer.candidates])
        trace = RegionTrace()
        try:
            rs = build_regions(
                pts, delta_g, n_min=n_min, layer_index=layer.waypoint_index, trace=trace
            )
        except EmptyRegionSet:
            rs = None
            warnings.append(
                f"layer {layer.waypoint_index}: no refinable region, node pinned"
            )
        regions.append(rs)
        traces.append(trace)
    return regions, traces, warnings


def run_pipeline(
    config: PlannerConfig,
    trajectory: list[Pose6],
    start: BaseConfig,
    out_dir: Path | None = None,
    workers: int | None = None,
) -> PipelineResult:
    targets = discretize_trajectory(trajectory, config.ds)
    rmap = build_rm(
        config.arm,
        config.grid,
        seed=config.seed,
        workers=workers,
        voxel_cap=config.voxel_cap,
    )
    irm = build_irm(rmap)
    graph = build_graph(irm, targets, start, config.mount_offset)
    discrete = search(
        graph,
        weights=config.weights,
        anchor_start=config.anchor_start,
        exact_smoothness=config.exact_smoothness,
    )
    regions, traces, warnings = layer_regions(graph, config.delta_g, config.n_min)
    problem = make_problem(
        discrete,
        regions,
        alpha=config.alpha,
        weights=config.weights,
        anchor_end=config.anchor_end,
    )
    refined = lbfgs_minimize(
        problem,
        max_iter=config.max_iter,
        grad_tol=config.grad_tol,
        history=config.history,
    )
    joints = recompute_joints(
        config.arm, refined.path, targets, discrete.joints, config.mount_offset
    )
    plan = PlanResult(refined.path, joints, targets, provenance="refined")
    discrete_plan = PlanResult(discrete.nodes, discrete.joints, targets, provenance="discrete")

    result = PipelineResult(
        config=config,
        trajectory=targets,
        graph=graph,
        discrete=discrete,
        regions=regions,
        traces=traces,
        refine=refined,
        plan=plan,
        discrete_plan=discrete_plan,
        metrics=evaluate(config.arm, plan, config.mount_offset),
        discrete_metrics=evaluate(config.arm, discrete_plan, config.mount_offset),
        warnings=warnings,
    )
    if out_dir is not None:
        write_artifacts(result, rmap, irm, Path(out_dir))
    return result


# ----------------------------------------------------------- serialization


def plan_to_dict(path: DiscretePath | list[BaseConfig], joints, total_cost, provenance):
    nodes = path if isinstance(path, list) else path.nodes
    return {
        "format_version": FORMAT_VERSION,
        "kind": "plan",
        "provenance": provenance,
        "nodes": [
            {"x": n.x, "y": n.y, "q": list(q)} for n, q in zip(nodes, joints)
        ],
        "total_cost": total_cost,
    }


def save_plan(path: Path, plan_dict: dict, extra: dict | None = None) -> None:
    obj = dict(plan_dict)
    if extra:
        obj.update(extra)
    dump_json(path, obj)


def load_plan(path) -> tuple[list[BaseConfig], list[tuple[float, ...]], float, str]:
    obj = load_json(path, "plan")
    try:
        nodes = [BaseConfig(float(r["x"]), float(r["y"])) for r in require(obj, "nodes", path)]
        joints = [tuple(float(v) for v in r["q"]) for r in obj["nodes"]]
        total = float(require(obj, "total_cost", path))
        provenance = str(obj.get("provenance", "discrete"))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed plan record ({exc})") from exc
    return nodes, joints, total, provenance


def regions_to_dict(regions: list[RegionSet | None], delta_g: float, n_min: int) -> dict:
    layers = []
    for i, rs in enumerate(regions):
        if rs is None:
            layers.append({"layer_index": i, "pinned": True, "polygons": []})
        else:
            layers.append(
                {
                    "layer_index": rs.layer_index if rs.layer_index >= 0 else i,
                    "pinned": False,
                    "polygons": [
                        [[float(x), float(y)] for x, y in r.vertices] for r in rs.regions
                    ],
                }
            )
    return {
        "format_version": FORMAT_VERSION,
        "kind": "regions",
        "delta_g": delta_g,
        "n_min": n_min,
        "layers": layers,
    }


def load_regions(path) -> list[RegionSet | None]:
    obj = load_json(path, "regions")
    out: list[RegionSet | None] = []
    try:
        for layer in require(obj, "layers", path):
            if layer.get("pinned"):
                out.append(None)
                continue
            polys = [
                ConvexRegion(tuple((float(x), float(y)) for x, y in poly))
                for poly in layer["polygons"]
            ]
            out.append(RegionSet(polys, layer_index=int(layer["layer_index"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed regions record ({exc})") from exc
    return out


def plan_result_to_dict(plan: PlanResult) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "plan_result",
        "provenance": plan.provenance,
        "targets": [[float(v) for v in t.to_array()] for t in plan.targets],
        "base_path": [[n.x, n.y] for n in plan.base_path],
        "joint_path": [list(q) for q in plan.joint_path],
    }


def load_plan_result(path) -> PlanResult:
    obj = load_json(path, "plan_result")
    try:
        targets = [Pose6.from_array(t) for t in require(obj, "targets", path)]
        bases = [BaseConfig(float(x), float(y)) for x, y in require(obj, "base_path", path)]
        joints = [tuple(float(v) for v in q) for q in require(obj, "joint_path", path)]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed plan result ({exc})") from exc
    return PlanResult(bases, joints, targets, provenance=str(obj.get("provenance", "refined")))


def metrics_to_dict(refined: MetricsReport, discrete: MetricsReport | None = None) -> dict:
    obj = {"format_version": FORMAT_VERSION, "kind": "metrics", "refined": refined.to_dict()}
    if discrete is not None:
        obj["discrete"] = discrete.to_dict()
    return obj


def write_report_csv(result: PipelineResult, path: Path) -> None:
    """Delimited per-waypoint report next to the JSON artifacts."""
    from .arm import fk_transform

    dx, dy, dz = result.config.mount_offset
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "waypoint",
                "target_x",
                "target_y",
                "target_z",
                "discrete_x",
                "discrete_y",
                "refined_x",
                "refined_y",
                "ee_error_mm",
            ]
        )
        for i, (t, d, r, q) in enumerate(
            zip(result.trajectory, result.discrete.nodes, result.plan.base_path, result.plan.joint_path)
        ):
            T = fk_transform(result.config.arm, np.array(q))
            world = np.array([r.x + dx + T[0, 3], r.y + dy + T[1, 3], dz + T[2, 3]])
            err_mm = float(np.linalg.norm(world - t.position)) * 1000.0
            writer.writerow(
                [i]
                + [repr(float(v)) for v in (t.x, t.y, t.z, d.x, d.y, r.x, r.y)]
                + [repr(err_mm)]
            )


def write_artifacts(result: PipelineResult, rmap, irm: InverseReachabilityMap, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    art = result.artifacts
    art["rm"] = out_dir / "rm.json"
    rm_save(rmap, art["rm"])
    art["irm"] = out_dir / "irm.json"
    irm_save(irm, art["irm"])
    art["trajectory"] = out_dir / "trajectory.json"
    save_trajectory(result.trajectory, art["trajectory"])
    art["plan_discrete"] = out_dir / "plan_discrete.json"
    save_plan(
        art["plan_discrete"],
        plan_to_dict(result.discrete, result.discrete.joints, result.discrete.total_cost, "discrete"),
        {"start": [result.graph.start.x, result.graph.start.y]},
    )
    art["regions"] = out_dir / "regions.json"
    dump_json(
        art["regions"],
        regions_to_dict(result.regions, result.config.delta_g, result.config.n_min),
    )
    art["plan_refined"] = out_dir / "plan_refined.json"
    save_plan(
        art["plan_refined"],
        plan_to_dict(result.plan.base_path, result.plan.joint_path, result.refine.final_cost, "refined"),
        {
            "refine": {
                "iterations": result.refine.iterations,
                "converged": result.refine.converged,
                "gradient_norm": result.refine.gradient_norm,
                "cost_trace": result.refine.cost_trace,
            }
        },
    )
    art["plan_result"] = out_dir / "plan_result.json"
    dump_json(art["plan_result"], plan_result_to_dict(result.plan))
    art["metrics"] = out_dir / "metrics.json"
    dump_json(art["metrics"], metrics_to_dict(result.metrics, result.discrete_metrics))
    art["report"] = out_dir / "report.csv"
    write_report_csv(result, art["report"])

    from .plots import emit_plots

    for name, p in emit_plots(result, out_dir / "plots").items():
        art[f"plot_{name}"] = p
