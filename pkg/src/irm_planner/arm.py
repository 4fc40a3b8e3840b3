"""Serial-arm kinematics: FK, geometric Jacobian, manipulability, IK.

Poses are (x, y, z, alpha, beta, gamma) with extrinsic XYZ Euler angles
(roll about world x, pitch about world y, yaw about world z), so the
rotation matrix is R = Rz(gamma) @ Ry(beta) @ Rx(alpha). Angles are kept
normalized to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, TAU)
    if r <= -math.pi:
        r += TAU
    return r


def wrap_diff(a: float, b: float) -> float:
    """Signed angular difference a - b wrapped to (-pi, pi]."""
    return normalize_angle(a - b)


@dataclass(frozen=True)
class Pose6:
    """End-effector pose: position in meters, extrinsic XYZ Euler angles in radians."""

    x: float
    y: float
    z: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", normalize_angle(self.alpha))
        object.__setattr__(self, "beta", normalize_angle(self.beta))
        object.__setattr__(self, "gamma", normalize_angle(self.gamma))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.alpha, self.beta, self.gamma])

    @classmethod
    def from_array(cls, v) -> "Pose6":
        v = np.asarray(v, dtype=float)
        return cls(*(float(c) for c in v))

    def rotation(self) -> np.ndarray:
        return euler_to_matrix(self.alpha, self.beta, self.gamma)

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose6":
        a, b, g = matrix_to_euler(T[:3, :3])
        return cls(float(T[0, 3]), float(T[1, 3]), float(T[2, 3]), a, b, g)


def euler_to_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return np.array(
        [
            [cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa],
            [sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def matrix_to_euler(R: np.ndarray) -> tuple[float, float, float]:
    """Inverse of euler_to_matrix. Near beta = +-pi/2 the split between
    alpha and gamma is degenerate; alpha is pinned to 0 there."""
    sb = -float(R[2, 0])
    sb = max(-1.0, min(1.0, sb))
    beta = math.asin(sb)
    if abs(sb) < 1.0 - 1e-12:
        alpha = math.atan2(R[2, 1], R[2, 2])
        gamma = math.atan2(R[1, 0], R[0, 0])
    else:
        alpha = 0.0
        gamma = math.atan2(-R[0, 1], R[1, 1]) if sb > 0 else math.atan2(R[0, 1], R[1, 1])
    return normalize_angle(alpha), normalize_angle(beta), normalize_angle(gamma)


@dataclass(frozen=True)
class ArmModel:
    """Serial chain in standard DH convention.

    dh_rows holds one (a, alpha, d, theta_offset) tuple per joint.
    A planar model lives in the base xy-plane: its controllable task
    components are in-plane position (and yaw once it has 3+ joints).
    """

    name: str
    dh_rows: tuple[tuple[float, float, float, float], ...]
    joint_limits: tuple[tuple[float, float], ...]
    planar: bool = False

    def __post_init__(self):
        if self.joint_count < 2:
            raise ValueError("arm needs at least 2 joints")
        if len(self.joint_limits) != self.joint_count:
            raise ValueError("joint_limits length must match dh_rows")
        for lo, hi in self.joint_limits:
            if not lo < hi:
                raise ValueError(f"joint limit ({lo}, {hi}) must satisfy lo < hi")
        if self.total_length <= 0:
            raise ValueError("chain has zero reach")

    @property
    def joint_count(self) -> int:
        return len(self.dh_rows)

    @property
    def total_length(self) -> float:
        """Maximum reach: sum of per-link extents hypot(a, d)."""
        return float(sum(math.hypot(a, d) for a, _, d, _ in self.dh_rows))

    def check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.joint_count,):
            raise ValueError(f"expected {self.joint_count} joint values, got shape {q.shape}")
        for i, (lo, hi) in enumerate(self.joint_limits):
            if not (lo - 1e-12 <= q[i] <= hi + 1e-12):
                raise ValueError(f"joint {i} value {q[i]:.6f} outside limits [{lo}, {hi}]")
        return q

    def clamp_q(self, q: np.ndarray) -> np.ndarray:
        lo = np.array([l for l, _ in self.joint_limits])
        hi = np.array([h for _, h in self.joint_limits])
        return np.clip(q, lo, hi)

    def random_q(self, rng: np.random.Generator) -> np.ndarray:
        lo = np.array([l for l, _ in self.joint_limits])
        hi = np.array([h for _, h in self.joint_limits])
        return rng.uniform(lo, hi)


def planar_two_link(l1: float = 0.5, l2: float = 0.5) -> ArmModel:
    """Two-revolute-joint arm in the horizontal plane, analytic IK."""
    return ArmModel(
        name=f"planar2[{l1},{l2}]",
        dh_rows=((l1, 0.0, 0.0, 0.0), (l2, 0.0, 0.0, 0.0)),
        joint_limits=((-math.pi, math.pi), (-math.pi, math.pi)),
        planar=True,
    )


def _dh_transform(a: float, alpha: float, d: float, theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def fk_transform(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Homogeneous end-effector transform in the arm-base frame."""
    T = np.eye(4)
    for (a, alpha, d, off), qi in zip(model.dh_rows, q):
        T = T @ _dh_transform(a, alpha, d, qi + off)
    return T


def forward_kinematics(model: ArmModel, q: np.ndarray) -> Pose6:
    q = model.check_q(q)
    return Pose6.from_matrix(fk_transform(model, q))


def jacobian(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian, 6 x joint_count.

    Rows 0-2 map joint rates to end-effector linear velocity, rows 3-5 to
    angular velocity, both expressed in the arm-base frame.
    """
    q = model.check_q(q)
    n = model.joint_count
    origins = np.zeros((n + 1, 3))
    axes = np.zeros((n + 1, 3))
    axes[0] = (0.0, 0.0, 1.0)
    T = np.eye(4)
    for i, ((a, alpha, d, off), qi) in enumerate(zip(model.dh_rows, q)):
        T = T @ _dh_transform(a, alpha, d, qi + off)
        origins[i + 1] = T[:3, 3]
        axes[i + 1] = T[:3, 2]
    p_e = origins[n]
    J = np.zeros((6, n))
    for i in range(n):
        J[:3, i] = np.cross(axes[i], p_e - origins[i])
        J[3:, i] = axes[i]
    return J


def _task_rows(model: ArmModel) -> list[int]:
    if model.planar:
        # in-plane position, then yaw if the chain has a joint to spare
        rows = [0, 1, 5]
        return rows[: min(3, model.joint_count)]
    return [0, 1, 2, 3, 4, 5]


def manipulability(model: ArmModel, q: np.ndarray) -> float:
    """Yoshikawa dexterity index over the model's task rows.

    sqrt(det(J J^T)) when rows <= joints, else sqrt(det(J^T J)) so the
    measure stays meaningful for chains with fewer joints than task rows.
    """
    J = jacobian(model, q)[_task_rows(model), :]
    m, n = J.shape
    if m == n:
        # same value as sqrt(det(J J^T)) but exact at singular configs
        return abs(float(np.linalg.det(J)))
    G = J @ J.T if m < n else J.T @ J
    det = float(np.linalg.det(G))
    return math.sqrt(max(det, 0.0))


def _pose_error(target: Pose6, T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Position error and rotation-vector orientation error of T vs target."""
    p_err = target.position - T[:3, 3]
    R_err = target.rotation() @ T[:3, :3].T
    # rotation vector via the matrix log
    cos_t = (np.trace(R_err) - 1.0) / 2.0
    cos_t = max(-1.0, min(1.0, cos_t))
    theta = math.acos(cos_t)
    if theta < 1e-12:
        w = np.zeros(3)
    elif theta > math.pi - 1e-6:
        # near pi the skew part vanishes; recover axis from the symmetric part
        A = (R_err + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        k = int(np.argmax(axis))
        if axis[k] > 0:
            axis = A[:, k] / axis[k]
        norm = np.linalg.norm(axis)
        axis = axis / norm if norm > 0 else np.array([1.0, 0.0, 0.0])
        w = theta * axis
    else:
        w = (
            theta
            / (2.0 * math.sin(theta))
            * np.array(
                [
                    R_err[2, 1] - R_err[1, 2],
                    R_err[0, 2] - R_err[2, 0],
                    R_err[1, 0] - R_err[0, 1],
                ]
            )
        )
    return p_err, w


def _ik_planar2(model: ArmModel, target: Pose6, seed: np.ndarray, pos_tol: float):
    """Closed-form 2R planar IK on in-plane position; picks the elbow branch
    closest to the seed, ties broken toward the non-negative elbow."""
    l1 = model.dh_rows[0][0]
    l2 = model.dh_rows[1][0]
    x, y = target.x, target.y
    r2 = x * x + y * y
    denom = 2.0 * l1 * l2
    cos_e = (r2 - l1 * l1 - l2 * l2) / denom
    if abs(cos_e) > 1.0 + 1e-6:
        return None
    cos_e = max(-1.0, min(1.0, cos_e))
    elbow = math.acos(cos_e)
    base_angle = math.atan2(y, x)
    sols = []
    for e in (elbow, -elbow):
        q1 = base_angle - math.atan2(l2 * math.sin(e), l1 + l2 * math.cos(e))
        sols.append(np.array([normalize_angle(q1), normalize_angle(e)]))
    d0 = sum(wrap_diff(a, b) ** 2 for a, b in zip(sols[0], seed))
    d1 = sum(wrap_diff(a, b) ** 2 for a, b in zip(sols[1], seed))
    q = sols[0] if d0 <= d1 else sols[1]
    T = fk_transform(model, q)
    if math.hypot(T[0, 3] - x, T[1, 3] - y) > pos_tol:
        return None
    return q


def _ik_dls(
    model: ArmModel,
    target: Pose6,
    seed: np.ndarray,
    pos_tol: float,
    rot_tol: float,
    damping: float,
    max_iter: int,
) -> np.ndarray | None:
    """Damped-least-squares iteration from one seed; position-only task for
    planar chains, full 6D otherwise."""
    planar = model.planar
    q = model.clamp_q(np.asarray(seed, dtype=float).copy())
    for _ in range(max_iter):
        T = fk_transform(model, q)
        p_err, w_err = _pose_error(target, T)
        if planar:
            e = p_err[:2]
        else:
            e = np.concatenate([p_err, w_err])
        p_ok = np.linalg.norm(p_err[:2] if planar else p_err) <= pos_tol
        r_ok = planar or np.linalg.norm(w_err) <= rot_tol
        if p_ok and r_ok:
            return q
        J = jacobian(model, q)
        J = J[:2, :] if planar else J
        JJt = J @ J.T + (damping**2) * np.eye(J.shape[0])
        dq = J.T @ np.linalg.solve(JJt, e)
        step = np.linalg.norm(dq)
        if step > 0.5:
            dq *= 0.5 / step
        q = model.clamp_q(q + dq)
    return None


def ik_solve(
    model: ArmModel,
    target: Pose6,
    seed: np.ndarray,
    *,
    pos_tol: float = 1e-6,
    rot_tol: float = 1e-6,
    damping: float = 1e-3,
    max_iter: int = 200,
    restarts: int = 8,
    rng: np.random.Generator | None = None,
) -> np.ndarray | None:
    """Solve IK for target; None means unreachable (not a fault).

    Planar models match in-plane position only; the chain fixes the
    out-of-plane and orientation components and callers validate those
    against their own bins. Spatial models match full 6D pose. The seed
    is tried first, then ``restarts`` uniform in-limit seeds.
    """
    seed = np.asarray(seed, dtype=float)
    if model.planar and model.joint_count == 2:
        return _ik_planar2(model, target, seed, pos_tol)
    q = _ik_dls(model, target, seed, pos_tol, rot_tol, damping, max_iter)
    if q is not None:
        return q
    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(restarts):
        q = _ik_dls(model, target, model.random_q(rng), pos_tol, rot_tol, damping, max_iter)
        if q is not None:
            return q
    return None
