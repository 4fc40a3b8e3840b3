import json
import math

import pytest


@pytest.fixture
def small_config(tmp_path):
    """Coarse, fast planar setup: 0.5 m reach, 0.1 m grid."""
    cfg = {
        "format_version": 1,
        "arm": {"type": "planar2", "l1": 0.25, "l2": 0.25},
        "grid": {"delta_p": 0.1, "delta_r": 2 * math.pi, "radius": 0.5},
        "mount_offset": [0.0, 0.0, 0.0],
        "ds": 0.1,
        "n_min": 5,
        "alpha": 50.0,
        "weights": [1.0, 1.0],
        "optimizer": {"max_iter": 200, "grad_tol": 1e-6, "history": 8},
        "seed": 0,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path


@pytest.fixture
def straight_traj(tmp_path):
    poses = [[0.3 + 0.1 * i, 0.0, 0.0, 0.0, 0.0, 0.0] for i in range(8)]
    path = tmp_path / "traj.json"
    path.write_text(
        json.dumps({"format_version": 1, "kind": "trajectory", "poses": poses})
    )
    return path
