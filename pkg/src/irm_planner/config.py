"""Planner configuration: strict schema, every tunable in one place.

Unknown keys are rejected so typos fail loudly instead of silently running
with defaults. The grid radius defaults to the arm's total reach, delta_g
to the grid pitch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .arm import ArmModel, planar_two_link
from .errors import ConfigError
from .reachability import DEFAULT_VOXEL_CAP, GridSpec


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _positive(value, name):
    v = float(value)
    if not v > 0 or not math.isfinite(v):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return v


def build_arm(spec: dict) -> ArmModel:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("arm: expected an object with a 'type' key")
    kind = spec["type"]
    if kind == "planar2":
        _check_keys(spec, {"type", "l1", "l2"}, "arm")
        return planar_two_link(
            _positive(spec.get("l1", 0.5), "arm.l1"), _positive(spec.get("l2", 0.5), "arm.l2")
        )
    if kind == "dh":
        _check_keys(spec, {"type", "name", "dh_rows", "joint_limits", "planar"}, "arm")
        try:
            rows = tuple(tuple(float(v) for v in row) for row in spec["dh_rows"])
            limits = tuple((float(lo), float(hi)) for lo, hi in spec["joint_limits"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"arm: malformed dh description ({exc})") from exc
        if any(len(r) != 4 for r in rows):
            raise ConfigError("arm.dh_rows: each row needs (a, alpha, d, theta_offset)")
        try:
            return ArmModel(
                name=str(spec.get("name", "dh-arm")),
                dh_rows=rows,
                joint_limits=limits,
                planar=bool(spec.get("planar", False)),
            )
        except ValueError as exc:
            raise ConfigError(f"arm: {exc}") from exc
    raise ConfigError(f"arm.type must be 'planar2' or 'dh', got {kind!r}")


@dataclass
class PlannerConfig:
    arm: ArmModel
    grid: GridSpec
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ds: float = 0.1
    delta_g: float = 0.1
    n_min: int = 5
    alpha: float = 50.0
    weights: tuple[float, float] = (1.0, 1.0)
    max_iter: int = 500
    grad_tol: float = 1e-6
    history: int = 8
    seed: int = 0
    voxel_cap: int = DEFAULT_VOXEL_CAP
    anchor_start: bool = True
    anchor_end: bool = False
    exact_smoothness: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: expected a JSON object")
        allowed = {
            "format_version",
            "arm",
            "grid",
            "mount_offset",
            "ds",
            "delta_g",
            "n_min",
            "alpha",
            "weights",
            "optimizer",
            "seed",
            "voxel_cap",
            "anchor_start",
            "anchor_end",
            "exact_smoothness",
        }
        _check_keys(d, allowed, "config")
        for key in ("arm", "grid", "ds"):
            if key not in d:
                raise ConfigError(f"config: missing required key {key!r}")

        arm = build_arm(d["arm"])
        gspec = d["grid"]
        if not isinstance(gspec, dict):
            raise ConfigError("grid: expected an object")
        _check_keys(gspec, {"delta_p", "delta_r", "radius"}, "grid")
        radius = gspec.get("radius")
        try:
            grid = GridSpec(
                delta_p=_positive(gspec["delta_p"], "grid.delta_p"),
                delta_r=_positive(gspec["delta_r"], "grid.delta_r"),
                radius=_positive(radius, "grid.radius") if radius is not None else arm.total_length,
            )
        except KeyError as exc:
            raise ConfigError(f"grid: missing key {exc}") from exc

        mount = d.get("mount_offset", [0.0, 0.0, 0.0])
        if not (isinstance(mount, (list, tuple)) and len(mount) == 3):
            raise ConfigError("mount_offset must be [dx, dy, dz]")
        weights = d.get("weights", [1.0, 1.0])
        if not (isinstance(weights, (list, tuple)) and len(weights) == 2):
            raise ConfigError("weights must be [w_len, w_smooth]")
        opt = d.get("optimizer", {})
        if not isinstance(opt, dict):
            raise ConfigError("optimizer: expected an object")
        _check_keys(opt, {"max_iter", "grad_tol", "history"}, "optimizer")

        n_min = int(d.get("n_min", 5))
        if n_min < 3:
            raise ConfigError("n_min must be at least 3")

        return cls(
            arm=arm,
            grid=grid,
            mount_offset=tuple(float(v) for v in mount),
            ds=_positive(d["ds"], "ds"),
            delta_g=_positive(d.get("delta_g", grid.delta_p), "delta_g"),
            n_min=n_min,
            alpha=_positive(d.get("alpha", 50.0), "alpha"),
            weights=tuple(float(w) for w in weights),
            max_iter=int(opt.get("max_iter", 500)),
            grad_tol=_positive(opt.get("grad_tol", 1e-6), "optimizer.grad_tol"),
            history=int(opt.get("history", 8)),
            seed=int(d.get("seed", 0)),
            voxel_cap=int(d.get("voxel_cap", DEFAULT_VOXEL_CAP)),
            anchor_start=bool(d.get("anchor_start", True)),
            anchor_end=bool(d.get("anchor_end", False)),
            exact_smoothness=bool(d.get("exact_smoothness", False)),
            raw=d,
        )


def load_config(path) -> PlannerConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: unreadable config ({exc})") from exc
    return PlannerConfig.from_dict(obj)
