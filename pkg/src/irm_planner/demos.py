"""Built-in demonstration trajectories.

Three closed task paths at desk scale: a figure-eight lemniscate, a
capsule (stadium) loop, and a rectangular polygon. Dimensions are
(width, length, height) in meters; height is a constant end-effector
working height above the base plane, and the matching demo config mounts
the arm plane at that height. Yaw follows the path tangent, roll and
pitch stay zero.
"""

from __future__ import annotations

import math

import numpy as np

from .arm import Pose6
from .errors import InputError

DEMO_DIMENSIONS = {
    "lemniscate": (1.2, 3.0, 0.2),
    "capsule": (2.5, 1.0, 0.0),
    "polygon": (3.0, 1.5, 0.2),
}


def _with_tangent_yaw(xy: np.ndarray, z: float) -> list[Pose6]:
    d = np.gradient(xy, axis=0)
    yaw = np.arctan2(d[:, 1], d[:, 0])
    return [
        Pose6(float(x), float(y), z, 0.0, 0.0, float(g)) for (x, y), g in zip(xy, yaw)
    ]


def lemniscate(width: float = 1.2, length: float = 3.0, height: float = 0.2, n: int = 400):
    """Gerono figure-eight: x = (L/2) sin t, y = (W/2) sin 2t."""
    t = np.linspace(0.0, 2.0 * math.pi, n)
    xy = np.stack([(length / 2) * np.sin(t), (width / 2) * np.sin(2 * t)], axis=1)
    return _with_tangent_yaw(xy, height)


def capsule(length: float = 2.5, width: float = 1.0, height: float = 0.0, n: int = 400):
    """Stadium loop: two straights joined by semicircular caps."""
    r = width / 2
    straight = length - width
    if straight < 0:
        raise InputError("capsule length must be at least its width")
    half = straight / 2
    seg_pts = max(2, n // 4)
    bottom = np.stack(
        [np.linspace(-half, half, seg_pts), np.full(seg_pts, -r)], axis=1
    )
    a = np.linspace(-math.pi / 2, math.pi / 2, seg_pts)
    right_cap = np.stack([half + r * np.cos(a), r * np.sin(a)], axis=1)
    top = np.stack([np.linspace(half, -half, seg_pts), np.full(seg_pts, r)], axis=1)
    left_cap = np.stack([-half - r * np.cos(a), -r * np.sin(a)], axis=1)
    xy = np.vstack([bottom, right_cap[1:], top[1:], left_cap[1:]])
    return _with_tangent_yaw(xy, height)


def polygon(length: float = 3.0, width: float = 1.5, height: float = 0.2):
    """Rectangular loop traversed counterclockwise from the lower-left corner."""
    hx, hy = length / 2, width / 2
    corners = [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy), (-hx, -hy)]
    out = []
    for i, (x, y) in enumerate(corners):
        nxt = corners[min(i + 1, len(corners) - 1)]
        prv = corners[max(i - 1, 0)]
        yaw = math.atan2(nxt[1] - y, nxt[0] - x) if i < len(corners) - 1 else math.atan2(
            y - prv[1], x - prv[0]
        )
        out.append(Pose6(x, y, height, 0.0, 0.0, yaw))
    return out


def get_demo(name: str) -> list[Pose6]:
    name = name.lower()
    if name == "lemniscate":
        w, l, h = DEMO_DIMENSIONS[name]
        return lemniscate(w, l, h)
    if name == "capsule":
        l, w, h = DEMO_DIMENSIONS[name]
        return capsule(l, w, h)
    if name == "polygon":
        l, w, h = DEMO_DIMENSIONS[name]
        return polygon(l, w, h)
    raise InputError(f"unknown demo trajectory {name!r}; choose from {sorted(DEMO_DIMENSIONS)}")


def demo_height(name: str) -> float:
    name = name.lower()
    if name not in DEMO_DIMENSIONS:
        raise InputError(f"unknown demo trajectory {name!r}")
    return DEMO_DIMENSIONS[name][2]


def demo_config(name: str) -> dict:
    """Planner configuration for running a demo with the built-in planar arm,
    arm plane mounted at the demo's working height.

    The 0.5 m reach is deliberately small against the task dimensions so the
    base genuinely tracks the path; with a longer arm the feasible regions of
    all waypoints overlap and the shortest-path pull degenerates the base
    trajectory into a jittery near-point."""
    return {
        "format_version": 1,
        "arm": {"type": "planar2", "l1": 0.25, "l2": 0.25},
        "grid": {"delta_p": 0.05, "delta_r": 2 * math.pi, "radius": 0.5},
        "mount_offset": [0.0, 0.0, demo_height(name)],
        "ds": 0.1,
        "n_min": 5,
        "alpha": 50.0,
        "weights": [1.0, 1.0],
        "optimizer": {"max_iter": 500, "grad_tol": 1e-6, "history": 8},
        "seed": 0,
    }
