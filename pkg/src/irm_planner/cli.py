"""Command-line interface.

Subcommands: rm build, irm build, irm query, plan, regions, refine,
pipeline, metrics, plot. Exit codes: 0 success, 2 malformed input or
config, 3 kinematically infeasible request, 4 internal error. The
IRM_PLANNER_THREADS environment variable (or --threads) caps map-build
workers; results never depend on the worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arm import Pose6
from .config import PlannerConfig, load_config
from .errors import ConfigError, FormatError, InputError, PlannerError, UnreachableWaypoint
from .graph import BaseConfig, build_graph, dijkstra_dp, discretize_trajectory
from .irm import build_irm, irm_load, irm_save, query_irm
from .metrics import evaluate
from .pipeline import (
    layer_regions,
    load_plan,
    load_plan_result,
    load_regions,
    metrics_to_dict,
    plan_to_dict,
    regions_to_dict,
    run_pipeline,
    save_plan,
)
from .reachability import build_rm, rm_load, rm_save
from .refine import lbfgs_minimize, make_problem
from .serialize import dump_json
from .trajio import load_trajectory

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _parse_pair(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"{name} must be 'x,y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from exc


def _parse_pose(text: str) -> Pose6:
    parts = text.split(",")
    if len(parts) != 6:
        raise InputError(f"--pose must be 'x,y,z,alpha,beta,gamma', got {text!r}")
    try:
        return Pose6.from_array([float(v) for v in parts])
    except ValueError as exc:
        raise InputError(f"--pose: {exc}") from exc


def _threads(args) -> int | None:
    return args.threads  # None falls through to IRM_PLANNER_THREADS


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="irm-planner",
        description="Two-stage base-configuration planner for mobile manipulators",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    rm = sub.add_parser("rm", help="reachability map commands")
    rm_sub = rm.add_subparsers(dest="rm_command", required=True)
    rm_build = rm_sub.add_parser("build", help="sample the workspace and store the map")
    rm_build.add_argument("--config", required=True)
    rm_build.add_argument("--out", required=True)
    rm_build.add_argument("--threads", type=int, default=None)
    rm_build.add_argument(
        "--slice-svg", default=None, help="also render a 2D manipulability slice"
    )

    irm = sub.add_parser("irm", help="inverse reachability map commands")
    irm_sub = irm.add_subparsers(dest="irm_command", required=True)
    irm_build = irm_sub.add_parser("build", help="invert a reachability map")
    irm_build.add_argument("--rm", required=True)
    irm_build.add_argument("--out", required=True)
    irm_query = irm_sub.add_parser("query", help="base placements reaching a pose")
    irm_query.add_argument("--irm", required=True)
    irm_query.add_argument("--pose", required=True)
    irm_query.add_argument("--config", default=None, help="supplies the mount offset")

    plan = sub.add_parser("plan", help="discrete stage-one base path")
    plan.add_argument("--irm", required=True)
    plan.add_argument("--traj", required=True)
    plan.add_argument("--start", required=True)
    plan.add_argument("--out", required=True)
    plan.add_argument("--config", required=True)
    plan.add_argument("--exact-smoothness", action="store_true")

    regions = sub.add_parser("regions", help="per-layer convex feasible regions")
    regions.add_argument("--irm", required=True)
    regions.add_argument("--traj", required=True)
    regions.add_argument("--config", required=True)
    regions.add_argument("--out", required=True)
    regions.add_argument("--start", default="0,0")

    refine = sub.add_parser("refine", help="continuous stage-two refinement")
    refine.add_argument("--plan", required=True)
    refine.add_argument("--regions", required=True)
    refine.add_argument("--out", required=True)
    refine.add_argument("--config", default=None)
    refine.add_argument("--alpha", type=float, default=None)
    refine.add_argument("--anchor-end", action="store_true")

    pipe = sub.add_parser("pipeline", help="full plan: discretize through metrics")
    pipe.add_argument("--config", required=True)
    pipe.add_argument("--traj", required=True)
    pipe.add_argument("--start", required=True)
    pipe.add_argument("--out-dir", required=True)
    pipe.add_argument("--threads", type=int, default=None)

    metrics = sub.add_parser("metrics", help="score a stored plan result")
    metrics.add_argument("--plan", required=True)
    metrics.add_argument("--config", required=True)
    metrics.add_argument("--out", required=True)

    plot = sub.add_parser("plot", help="render the standard figures for a plan")
    plot.add_argument("--config", required=True)
    plot.add_argument("--traj", required=True)
    plot.add_argument("--start", required=True)
    plot.add_argument("--out-dir", required=True)
    plot.add_argument("--threads", type=int, default=None)

    return ap


def _cmd_rm_build(args) -> int:
    cfg = load_config(args.config)
    rmap = build_rm(
        cfg.arm, cfg.grid, seed=cfg.seed, workers=_threads(args), voxel_cap=cfg.voxel_cap
    )
    rm_save(rmap, args.out)
    print(f"stored {len(rmap)} voxels -> {args.out}")
    if args.slice_svg:
        from .plots import plot_rm_slice

        # maps live in the arm frame; slice through the plane of the mount
        plot_rm_slice(rmap, Path(args.slice_svg), z=0.0)
        print(f"slice -> {args.slice_svg}")
    return EXIT_OK


def _cmd_irm_build(args) -> int:
    irm = build_irm(rm_load(args.rm))
    irm_save(irm, args.out)
    print(f"stored {len(irm)} entries in {len(irm.index)} submaps -> {args.out}")
    return EXIT_OK


def _cmd_irm_query(args) -> int:
    irm = irm_load(args.irm)
    mount = (0.0, 0.0, 0.0)
    if args.config:
        mount = load_config(args.config).mount_offset
    cands = query_irm(irm, _parse_pose(args.pose), mount)
    dump = {
        "count": len(cands),
        "candidates": [{"x": c.x, "y": c.y, "mu": c.mu, "q": list(c.q)} for c in cands],
    }
    import json

    print(json.dumps(dump, indent=2))
    return EXIT_OK


def _prepare_graph(args, cfg: PlannerConfig):
    irm = irm_load(args.irm)
    poses = load_trajectory(args.traj)
    targets = discretize_trajectory(poses, cfg.ds)
    start = BaseConfig(*_parse_pair(args.start, "--start"))
    return build_graph(irm, targets, start, cfg.mount_offset), targets, start


def _cmd_plan(args) -> int:
    cfg = load_config(args.config)
    graph, _, start = _prepare_graph(args, cfg)
    exact = args.exact_smoothness or cfg.exact_smoothness
    path, _ = dijkstra_dp(graph, cfg.weights, cfg.anchor_start, exact)
    save_plan(
        Path(args.out),
        plan_to_dict(path, path.joints, path.total_cost, "discrete"),
        {"start": [start.x, start.y]},
    )
    print(f"planned {len(path.nodes)} nodes, cost {path.total_cost:.6f} -> {args.out}")
    return EXIT_OK


def _cmd_regions(args) -> int:
    cfg = load_config(args.config)
    graph, _, _ = _prepare_graph(args, cfg)
    regions, _, warnings = layer_regions(graph, cfg.delta_g, cfg.n_min)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    dump_json(Path(args.out), regions_to_dict(regions, cfg.delta_g, cfg.n_min))
    built = sum(1 for r in regions if r is not None)
    print(f"extracted regions for {built}/{len(regions)} layers -> {args.out}")
    return EXIT_OK


def _cmd_refine(args) -> int:
    cfg = load_config(args.config) if args.config else None
    nodes, joints, total, _ = load_plan(args.plan)
    regions = load_regions(args.regions)
    if len(regions) != len(nodes):
        raise InputError(
            f"plan has {len(nodes)} nodes but regions file covers {len(regions)} layers"
        )
    from .graph import DiscretePath

    discrete = DiscretePath(nodes=nodes, joints=joints, total_cost=total)
    alpha = args.alpha if args.alpha is not None else (cfg.alpha if cfg else 50.0)
    weights = cfg.weights if cfg else (1.0, 1.0)
    anchor_end = args.anchor_end or (cfg.anchor_end if cfg else False)
    prob = make_problem(discrete, regions, alpha=alpha, weights=weights, anchor_end=anchor_end)
    res = lbfgs_minimize(
        prob,
        max_iter=cfg.max_iter if cfg else 500,
        grad_tol=cfg.grad_tol if cfg else 1e-6,
        history=cfg.history if cfg else 8,
    )
    save_plan(
        Path(args.out),
        plan_to_dict(res.path, joints, res.final_cost, "refined"),
        {
            "refine": {
                "iterations": res.iterations,
                "converged": res.converged,
                "gradient_norm": res.gradient_norm,
                "cost_trace": res.cost_trace,
            }
        },
    )
    print(
        f"refined in {res.iterations} iterations "
        f"({'converged' if res.converged else 'iteration limit'}), "
        f"cost {res.final_cost:.6f} -> {args.out}"
    )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    poses = load_trajectory(args.traj)
    start = BaseConfig(*_parse_pair(args.start, "--start"))
    result = run_pipeline(cfg, poses, start, out_dir=Path(args.out_dir), workers=_threads(args))
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    m = result.metrics
    print(
        f"pipeline complete: {len(result.trajectory)} waypoints, "
        f"L_b={m.L_b:.3f} m, S_b={m.S_b:.4g} 1/m, "
        f"E_ee_mean={m.E_ee_mean:.3g} mm, rmse={m.rmse:.3g} mm"
    )
    print(f"artifacts in {args.out_dir}")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    cfg = load_config(args.config)
    plan = load_plan_result(args.plan)
    report = evaluate(cfg.arm, plan, cfg.mount_offset)
    obj = metrics_to_dict(report)
    # flatten the report keys at top level for direct consumption
    obj.update(report.to_dict())
    dump_json(Path(args.out), obj)
    print(
        f"L_b={report.L_b:.4f} m  S_b={report.S_b:.6g} 1/m  "
        f"E_ee_max={report.E_ee_max:.4g} mm  E_ee_mean={report.E_ee_mean:.4g} mm  "
        f"rmse={report.rmse:.4g} mm"
    )
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plots import emit_plots

    cfg = load_config(args.config)
    poses = load_trajectory(args.traj)
    start = BaseConfig(*_parse_pair(args.start, "--start"))
    result = run_pipeline(cfg, poses, start, workers=_threads(args))
    files = emit_plots(result, Path(args.out_dir))
    for name, path in files.items():
        print(f"{name}: {path}")
    return EXIT_OK


_DISPATCH = {
    ("rm", "build"): _cmd_rm_build,
    ("irm", "build"): _cmd_irm_build,
    ("irm", "query"): _cmd_irm_query,
    ("plan", None): _cmd_plan,
    ("regions", None): _cmd_regions,
    ("refine", None): _cmd_refine,
    ("pipeline", None): _cmd_pipeline,
    ("metrics", None): _cmd_metrics,
    ("plot", None): _cmd_plot,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    sub = getattr(args, "rm_command", None) or getattr(args, "irm_command", None)
    handler = _DISPATCH[(args.command, sub)]
    try:
        return handler(args)
    except UnreachableWaypoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, FormatError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlannerError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, code 4
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
