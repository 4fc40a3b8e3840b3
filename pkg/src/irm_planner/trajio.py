"""Trajectory ingestion: versioned JSON, headed CSV, or a built-in demo."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .arm import Pose6
from .demos import get_demo
from .errors import FormatError, InputError
from .serialize import FORMAT_VERSION, dump_json, load_json, require

CSV_HEADER = ["x", "y", "z", "alpha", "beta", "gamma"]


def _validate(poses: list[Pose6], origin: str) -> list[Pose6]:
    if len(poses) < 2:
        raise InputError(f"{origin}: a trajectory needs at least 2 poses")
    for i, p in enumerate(poses):
        if not all(math.isfinite(v) for v in p.to_array()):
            raise InputError(f"{origin}: non-finite value in pose {i}")
    return poses


def load_trajectory(spec: str | Path) -> list[Pose6]:
    """Accepts 'demo:<name>', a .csv path, or a trajectory JSON path."""
    text = str(spec)
    if text.startswith("demo:"):
        return _validate(get_demo(text[len("demo:") :]), text)
    path = Path(spec)
    if path.suffix.lower() == ".csv":
        return _load_csv(path)
    obj = load_json(path, "trajectory")
    records = require(obj, "poses", path)
    try:
        poses = [Pose6.from_array([float(v) for v in rec]) for rec in records]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed pose record ({exc})") from exc
    return _validate(poses, str(path))


def _load_csv(path: Path) -> list[Pose6]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != CSV_HEADER:
                raise FormatError(
                    f"{path}: first row must be the header {','.join(CSV_HEADER)}"
                )
            poses = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 6:
                    raise FormatError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
                try:
                    poses.append(Pose6.from_array([float(v) for v in row]))
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise FormatError(f"{path}: unreadable ({exc})") from exc
    return _validate(poses, str(path))


def save_trajectory(poses: list[Pose6], path) -> None:
    dump_json(
        path,
        {
            "format_version": FORMAT_VERSION,
            "kind": "trajectory",
            "poses": [[float(v) for v in p.to_array()] for p in poses],
        },
    )
