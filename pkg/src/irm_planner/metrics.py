"""Evaluation metrics for planned base paths and their arm configurations.

Reported quantities: base path length L_b (meters), path smoothness S_b as
discretely integrated squared curvature (1/meters, via Menger curvature of
consecutive triples), and end-effector position error E_ee / RMSE in
millimeters against the task targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, Pose6, fk_transform, ik_solve, wrap_diff
from .graph import BaseConfig


@dataclass
class PlanResult:
    base_path: list[BaseConfig]
    joint_path: list[tuple[float, ...]]
    targets: list[Pose6]
    provenance: str  # "discrete" | "refined"

    def __post_init__(self):
        if not (len(self.base_path) == len(self.joint_path) == len(self.targets)):
            raise ValueError("base_path, joint_path and targets must have equal length")


@dataclass
class MetricsReport:
    L_b: float
    S_b: float
    E_ee_max: float  # millimeters
    E_ee_mean: float
    rmse: float
    orientation_error_max: float = 0.0  # radians, supplementary
    orientation_error_mean: float = 0.0

    def to_dict(self) -> dict:
        return {
            "L_b": self.L_b,
            "S_b": self.S_b,
            "E_ee_max": self.E_ee_max,
            "E_ee_mean": self.E_ee_mean,
            "rmse": self.rmse,
            "orientation_error_max": self.orientation_error_max,
            "orientation_error_mean": self.orientation_error_mean,
        }


def base_length(path: list[BaseConfig]) -> float:
    if len(path) < 2:
        raise ValueError("path length needs at least 2 nodes")
    pts = np.array([[n.x, n.y] for n in path])
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def _menger_curvature(a, b, c) -> float:
    """Reciprocal radius of the circle through three points; 0 for collinear
    or degenerate triples."""
    ab = np.linalg.norm(b - a)
    bc = np.linalg.norm(c - b)
    ca = np.linalg.norm(a - c)
    denom = ab * bc * ca
    if denom == 0.0:
        return 0.0
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return 2.0 * abs(cross) / denom


def base_smoothness(path: list[BaseConfig]) -> float:
    """Sum of curvature^2 * mean adjacent chord length over interior nodes."""
    if len(path) < 3:
        raise ValueError("smoothness needs at least 3 nodes")
    pts = np.array([[n.x, n.y] for n in path])
    total = 0.0
    for i in range(1, len(pts) - 1):
        k = _menger_curvature(pts[i - 1], pts[i], pts[i + 1])
        ds = 0.5 * (np.linalg.norm(pts[i] - pts[i - 1]) + np.linalg.norm(pts[i + 1] - pts[i]))
        total += k * k * ds
    return float(total)


def ee_error(
    model: ArmModel,
    plan: PlanResult,
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> tuple[float, float, float]:
    """(max, mean, rmse) end-effector position error in millimeters.

    World end-effector position: base placement (yaw 0) plus mount offset
    plus arm-frame FK.
    """
    dx, dy, dz = mount_offset
    errors = []
    for base, q, target in zip(plan.base_path, plan.joint_path, plan.targets):
        T = fk_transform(model, np.array(q))
        world = np.array([base.x + dx + T[0, 3], base.y + dy + T[1, 3], dz + T[2, 3]])
        errors.append(np.linalg.norm(world - target.position))
    err = np.array(errors) * 1000.0
    return float(err.max()), float(err.mean()), float(np.sqrt(np.mean(err**2)))


def orientation_error(
    model: ArmModel, plan: PlanResult
) -> tuple[float, float]:
    """(max, mean) per-axis-wrapped Euler angle error norm, radians.

    Supplementary: under-actuated arms cannot track all orientation
    components, so this is reported but never gated."""
    errs = []
    for q, target in zip(plan.joint_path, plan.targets):
        T = fk_transform(model, np.array(q))
        achieved = Pose6.from_matrix(T)
        d = [wrap_diff(float(a), float(t)) for a, t in zip(achieved.angles, target.angles)]
        errs.append(float(np.linalg.norm(d)))
    return float(max(errs)), float(np.mean(errs))


def recompute_joints(
    model: ArmModel,
    base_path: list[BaseConfig],
    targets: list[Pose6],
    seeds: list[tuple[float, ...]],
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> list[tuple[float, ...]]:
    """Re-solve IK for every node of a (possibly refined) base path.

    Targets are mapped into the arm frame at each base placement; the
    stage-one joint vectors seed the solves. Nodes whose IK fails keep
    their seed configuration (the error then shows up in the metrics
    instead of being hidden)."""
    dx, dy, dz = mount_offset
    out = []
    for base, target, seed in zip(base_path, targets, seeds):
        local = Pose6(
            target.x - base.x - dx,
            target.y - base.y - dy,
            target.z - dz,
            target.alpha,
            target.beta,
            target.gamma,
        )
        q = ik_solve(model, local, np.array(seed))
        out.append(tuple(float(v) for v in q) if q is not None else tuple(seed))
    return out


def evaluate(
    model: ArmModel,
    plan: PlanResult,
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> MetricsReport:
    e_max, e_mean, rmse = ee_error(model, plan, mount_offset)
    o_max, o_mean = orientation_error(model, plan)
    return MetricsReport(
        L_b=base_length(plan.base_path),
        S_b=base_smoothness(plan.base_path) if len(plan.base_path) >= 3 else 0.0,
        E_ee_max=e_max,
        E_ee_mean=e_mean,
        rmse=rmse,
        orientation_error_max=o_max,
        orientation_error_mean=o_mean,
    )
