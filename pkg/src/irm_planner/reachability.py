"""Reachability map construction and queries.

The 6D pose space around the arm base is tiled into voxels: translational
axes at resolution delta_p with bin centers at (k + 0.5) * delta_p, rotation
axes partitioned uniformly over (-pi, pi] with width <= delta_r. A voxel is
stored when IK finds a joint vector whose FK lands within half a bin of the
voxel center on every axis; it then carries that joint vector and its
manipulability score.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, Pose6, forward_kinematics, ik_solve, manipulability, wrap_diff
from .errors import ConfigError, FormatError
from .serialize import FORMAT_VERSION, dump_json, load_json, require

TAU = 2.0 * math.pi

DEFAULT_VOXEL_CAP = 5_000_000

# slack on the half-bin acceptance check so exact boundary hits survive
# float rounding (a planar chain sits exactly between its two z bins)
_HALF_BIN_SLACK = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Voxel grid resolutions and the sampling sphere radius."""

    delta_p: float
    delta_r: float
    radius: float

    def __post_init__(self):
        if self.delta_p <= 0 or self.delta_r <= 0 or self.radius <= 0:
            raise ConfigError("grid resolutions and radius must be positive")

    @property
    def rot_bins(self) -> int:
        """Uniform partition count of (-pi, pi], width at most delta_r."""
        return max(1, math.ceil(TAU / self.delta_r - 1e-9))

    @property
    def rot_width(self) -> float:
        return TAU / self.rot_bins

    def pos_index(self, v: float) -> int:
        return math.floor(v / self.delta_p)

    def pos_center(self, k: int) -> float:
        return (k + 0.5) * self.delta_p

    def rot_index(self, a: float) -> int:
        k = math.floor((a + math.pi) / self.rot_width)
        return min(max(k, 0), self.rot_bins - 1)

    def rot_center(self, k: int) -> float:
        return -math.pi + (k + 0.5) * self.rot_width

    def bin_of(self, pose: Pose6) -> tuple[int, int, int, int, int, int]:
        return (
            self.pos_index(pose.x),
            self.pos_index(pose.y),
            self.pos_index(pose.z),
            self.rot_index(pose.alpha),
            self.rot_index(pose.beta),
            self.rot_index(pose.gamma),
        )

    def center_of(self, bin_index) -> Pose6:
        ix, iy, iz, ia, ib, ig = bin_index
        return Pose6(
            self.pos_center(ix),
            self.pos_center(iy),
            self.pos_center(iz),
            self.rot_center(ia),
            self.rot_center(ib),
            self.rot_center(ig),
        )

    def to_dict(self) -> dict:
        return {"delta_p": self.delta_p, "delta_r": self.delta_r, "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(float(d["delta_p"]), float(d["delta_r"]), float(d["radius"]))


@dataclass(frozen=True)
class ReachVoxel:
    bin_index: tuple[int, int, int, int, int, int]
    representative_pose: Pose6
    q: tuple[float, ...]
    mu: float


@dataclass
class ReachabilityMap:
    grid: GridSpec
    voxels: dict[tuple, ReachVoxel]
    arm_id: str

    def __len__(self) -> int:
        return len(self.voxels)


def _pos_bin_range(grid: GridSpec):
    """Translational bin indices whose centers can lie inside the sphere."""
    kmin = math.floor(-grid.radius / grid.delta_p) - 1
    kmax = math.ceil(grid.radius / grid.delta_p) + 1
    ks = np.arange(kmin, kmax + 1)
    centers = (ks + 0.5) * grid.delta_p
    keep = np.abs(centers) <= grid.radius
    return ks[keep], centers[keep]


def count_voxels(grid: GridSpec) -> int:
    ks, centers = _pos_bin_range(grid)
    c2 = centers**2
    r2 = grid.radius**2
    inside = (c2[:, None, None] + c2[None, :, None] + c2[None, None, :]) <= r2
    return int(inside.sum()) * grid.rot_bins**3


def enumerate_voxels(grid: GridSpec, voxel_cap: int = DEFAULT_VOXEL_CAP):
    """All (bin_index, center pose) pairs inside the sphere, lexicographic order."""
    total = count_voxels(grid)
    if total > voxel_cap:
        raise ConfigError(
            f"grid would produce {total} voxels, above the cap of {voxel_cap}; "
            "coarsen delta_p/delta_r or raise the cap"
        )
    ks, centers = _pos_bin_range(grid)
    r2 = grid.radius**2
    nrot = grid.rot_bins
    out = []
    for i, cx in zip(ks, centers):
        for j, cy in zip(ks, centers):
            for k, cz in zip(ks, centers):
                if cx * cx + cy * cy + cz * cz > r2:
                    continue
                for ia in range(nrot):
                    for ib in range(nrot):
                        for ig in range(nrot):
                            idx = (int(i), int(j), int(k), ia, ib, ig)
                            out.append((idx, grid.center_of(idx)))
    return out


def _within_half_bin(grid: GridSpec, achieved: Pose6, center: Pose6) -> bool:
    hp = grid.delta_p / 2 + _HALF_BIN_SLACK
    hr = grid.rot_width / 2 + _HALF_BIN_SLACK
    if abs(achieved.x - center.x) > hp:
        return False
    if abs(achieved.y - center.y) > hp:
        return False
    if abs(achieved.z - center.z) > hp:
        return False
    for a, c in zip(achieved.angles, center.angles):
        if abs(wrap_diff(float(a), float(c))) > hr:
            return False
    return True


def _voxel_seed(seed: int, bin_index) -> np.random.Generator:
    # zigzag-map signed bin indices into the SeedSequence entropy words so the
    # per-voxel stream is independent of enumeration and worker order
    words = [seed] + [2 * k if k >= 0 else -2 * k - 1 for k in bin_index]
    return np.random.default_rng(np.random.SeedSequence(words))


def _solve_voxel(model: ArmModel, grid: GridSpec, item, seed: int):
    bin_index, center = item
    rng = _voxel_seed(seed, bin_index)
    q = ik_solve(model, center, np.zeros(model.joint_count), rng=rng)
    if q is None:
        return None
    achieved = forward_kinematics(model, q)
    if not _within_half_bin(grid, achieved, center):
        return None
    mu = manipulability(model, q)
    return ReachVoxel(bin_index, center, tuple(float(v) for v in q), float(mu))


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("IRM_PLANNER_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def build_rm(
    model: ArmModel,
    grid: GridSpec,
    *,
    seed: int = 0,
    workers: int | None = None,
    voxel_cap: int = DEFAULT_VOXEL_CAP,
) -> ReachabilityMap:
    """IK-probe every voxel inside the sphere and keep the feasible ones.

    The voxel list may be partitioned across worker threads; per-voxel RNG
    streams and an order-preserving merge make the result identical for any
    worker count.
    """
    items = enumerate_voxels(grid, voxel_cap)
    nworkers = resolve_workers(workers)
    if nworkers == 1 or len(items) < 64:
        results = [_solve_voxel(model, grid, it, seed) for it in items]
    else:
        chunks = [items[i::nworkers] for i in range(nworkers)]

        def run_chunk(chunk):
            return [_solve_voxel(model, grid, it, seed) for it in chunk]

        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            chunk_results = list(pool.map(run_chunk, chunks))
        # stitch round-robin partitions back into enumeration order
        results = [None] * len(items)
        for w, chunk_res in enumerate(chunk_results):
            results[w :: nworkers] = chunk_res
    voxels = {r.bin_index: r for r in results if r is not None}
    return ReachabilityMap(grid=grid, voxels=voxels, arm_id=model.name)


def rm_lookup(rmap: ReachabilityMap, pose: Pose6) -> ReachVoxel | None:
    """Voxel whose bin contains the pose, or None."""
    return rmap.voxels.get(rmap.grid.bin_of(pose))


def rm_save(rmap: ReachabilityMap, path) -> None:
    voxels = [
        {
            "bin": list(v.bin_index),
            "pose": [float(c) for c in v.representative_pose.to_array()],
            "q": list(v.q),
            "mu": v.mu,
        }
        for v in sorted(rmap.voxels.values(), key=lambda v: v.bin_index)
    ]
    dump_json(
        path,
        {
            "format_version": FORMAT_VERSION,
            "kind": "rm",
            "arm_id": rmap.arm_id,
            "grid": rmap.grid.to_dict(),
            "voxels": voxels,
        },
    )


def rm_load(path) -> ReachabilityMap:
    obj = load_json(path, "rm")
    try:
        grid = GridSpec.from_dict(require(obj, "grid", path))
        voxels = {}
        for rec in require(obj, "voxels", path):
            bin_index = tuple(int(b) for b in rec["bin"])
            voxels[bin_index] = ReachVoxel(
                bin_index=bin_index,
                representative_pose=Pose6.from_array(rec["pose"]),
                q=tuple(float(v) for v in rec["q"]),
                mu=float(rec["mu"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed reachability map record ({exc})") from exc
    return ReachabilityMap(grid=grid, voxels=voxels, arm_id=str(require(obj, "arm_id", path)))
