"""Versioned JSON artifact container.

Every persisted artifact is a JSON object carrying ``format_version`` and a
``kind`` tag. Writers emit a stable key order and LF line endings so repeated
runs are byte-identical; floats round-trip exactly through repr.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import FormatError

FORMAT_VERSION = 1


def dump_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_json(path, expected_kind: str) -> dict:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: not readable as JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object at top level")
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path}: format_version mismatch, expected {FORMAT_VERSION}, found {version!r}"
        )
    kind = obj.get("kind")
    if kind != expected_kind:
        raise FormatError(f"{path}: expected kind {expected_kind!r}, found {kind!r}")
    return obj


def require(obj: dict, key: str, path="artifact"):
    if key not in obj:
        raise FormatError(f"{path}: missing required key {key!r}")
    return obj[key]
