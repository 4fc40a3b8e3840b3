"""Inverse reachability map: planar base placements that reach a pose.

Each reachability voxel at pose (x, y, z, a, b, g) is inverted into the
relative base placement (-x, -y) and filed under the four-level key
(z bin, a bin, b bin, g bin). Querying a target pose looks up the submap of
its key and translates every stored placement into world coordinates. The
base never rotates, so keys and orientations transfer unchanged; an optional
mount offset shifts the arm frame relative to the base center.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arm import Pose6
from .errors import FormatError
from .reachability import GridSpec, ReachabilityMap
from .serialize import FORMAT_VERSION, dump_json, load_json, require

IrmKey = tuple[int, int, int, int]


@dataclass(frozen=True)
class IrmEntry:
    x_r: float
    y_r: float
    q: tuple[float, ...]
    mu: float


@dataclass(frozen=True)
class BaseCandidate:
    """World-frame base placement (yaw 0) with the arm configuration that
    reaches the queried pose from there."""

    x: float
    y: float
    q: tuple[float, ...]
    mu: float


@dataclass
class InverseReachabilityMap:
    grid: GridSpec
    index: dict[IrmKey, list[IrmEntry]]
    arm_id: str

    def __len__(self) -> int:
        return sum(len(v) for v in self.index.values())


def build_irm(rmap: ReachabilityMap) -> InverseReachabilityMap:
    """Invert every voxel; submaps are sorted by (x_r, y_r) for stable queries."""
    index: dict[IrmKey, list[IrmEntry]] = {}
    for bin_index in sorted(rmap.voxels):
        v = rmap.voxels[bin_index]
        key: IrmKey = bin_index[2:6]
        pose = v.representative_pose
        index.setdefault(key, []).append(IrmEntry(-pose.x, -pose.y, v.q, v.mu))
    for key in index:
        index[key].sort(key=lambda e: (e.x_r, e.y_r))
    return InverseReachabilityMap(grid=rmap.grid, index=index, arm_id=rmap.arm_id)


def query_irm(
    irm: InverseReachabilityMap,
    target: Pose6,
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> list[BaseCandidate]:
    """Feasible base placements for reaching ``target``; empty means
    unreachable at this pose. The mount offset is the arm-base position
    relative to the base center; its z component locates the arm plane."""
    dx, dy, dz = mount_offset
    g = irm.grid
    key: IrmKey = (
        g.pos_index(target.z - dz),
        g.rot_index(target.alpha),
        g.rot_index(target.beta),
        g.rot_index(target.gamma),
    )
    entries = irm.index.get(key, [])
    return [
        BaseCandidate(target.x + e.x_r - dx, target.y + e.y_r - dy, e.q, e.mu) for e in entries
    ]


def irm_save(irm: InverseReachabilityMap, path) -> None:
    submaps = [
        {
            "key": list(key),
            "entries": [
                {"x_r": e.x_r, "y_r": e.y_r, "q": list(e.q), "mu": e.mu}
                for e in irm.index[key]
            ],
        }
        for key in sorted(irm.index)
    ]
    dump_json(
        path,
        {
            "format_version": FORMAT_VERSION,
            "kind": "irm",
            "arm_id": irm.arm_id,
            "grid": irm.grid.to_dict(),
            "submaps": submaps,
        },
    )


def irm_load(path) -> InverseReachabilityMap:
    obj = load_json(path, "irm")
    try:
        grid = GridSpec.from_dict(require(obj, "grid", path))
        index: dict[IrmKey, list[IrmEntry]] = {}
        for sub in require(obj, "submaps", path):
            key = tuple(int(k) for k in sub["key"])
            if len(key) != 4:
                raise ValueError(f"key {key} is not a 4-tuple")
            index[key] = [
                IrmEntry(float(e["x_r"]), float(e["y_r"]), tuple(float(v) for v in e["q"]), float(e["mu"]))
                for e in sub["entries"]
            ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed inverse reachability record ({exc})") from exc
    return InverseReachabilityMap(grid=grid, index=index, arm_id=str(require(obj, "arm_id", path)))
