"""Kinematic model of a six-axis ABB IRB120 and the Cartesian-to-joint replay chain.

DH convention is the standard (distal) one: each row contributes
``Rz(theta + offset) Tz(d) Tx(a) Rx(alpha)``. With all joints at zero the
upper arm is vertical, the forearm points along +x and the flange faces
forward, which puts the flange at the datasheet home (0.374, 0, 0.630) m.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.transform import Rotation

from .errors import JointLimit, NoConvergence, PlanningFailed, Unreachable, ValidationError

TWO_PI = 2.0 * np.pi
# datasheet reach is quoted to 10 mm; the exact geometry reaches 0.580006 m
REACH_MARGIN_M = 1e-3


@dataclass(frozen=True)
class RobotModel:
    dh_rows: np.ndarray  # (6, 4): a, alpha, d, theta_offset
    joint_limits: np.ndarray  # (6, 2): lo, hi in rad
    max_reach_m: float
    name: str = "robot"

    def __post_init__(self):
        dh = np.array(self.dh_rows, dtype=np.float64)
        lim = np.array(self.joint_limits, dtype=np.float64)
        if dh.shape != (6, 4):
            raise ValidationError(f"dh_rows must be 6x4, got {dh.shape}")
        if lim.shape != (6, 2) or np.any(lim[:, 0] >= lim[:, 1]):
            raise ValidationError("joint_limits must be 6 (lo, hi) pairs with lo < hi")
        if not self.max_reach_m > 0:
            raise ValidationError("max_reach_m must be positive")
        dh.flags.writeable = False
        lim.flags.writeable = False
        object.__setattr__(self, "dh_rows", dh)
        object.__setattr__(self, "joint_limits", lim)
        scalars = tuple(
            (float(a), math.cos(al), math.sin(al), float(d), float(off)) for a, al, d, off in dh
        )
        object.__setattr__(self, "_dh_scalars", scalars)

    @property
    def shoulder(self) -> np.ndarray:
        # a1 = 0 for the IRB120, so joint 2's axis passes through (0, 0, d1)
        return np.array([0.0, 0.0, self.dh_rows[0, 2]])

    @property
    def flange_length(self) -> float:
        return float(self.dh_rows[5, 2])

    def within_limits(self, q, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=np.float64)
        return bool(np.all(q >= self.joint_limits[:, 0] - tol) and np.all(q <= self.joint_limits[:, 1] + tol))


def irb120_model() -> RobotModel:
    """ABB IRB120 geometry and axis ranges from the product specification."""
    deg = np.pi / 180.0
    dh = [
        # a      alpha        d      offset
        [0.000, -np.pi / 2, 0.290, 0.0],
        [0.270, 0.0, 0.000, -np.pi / 2],
        [0.070, -np.pi / 2, 0.000, 0.0],
        [0.000, np.pi / 2, 0.302, 0.0],
        [0.000, -np.pi / 2, 0.000, 0.0],
        [0.000, 0.0, 0.072, 0.0],
    ]
    limits = np.array([
        [-165, 165],
        [-110, 110],
        [-110, 70],
        [-160, 160],
        [-120, 120],
        [-400, 400],
    ]) * deg
    return RobotModel(np.array(dh), limits, 0.58, name="ABB IRB120")


@dataclass(frozen=True)
class Pose:
    """Position in metres plus a unit quaternion ``(x, y, z, w)``."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=np.float64).reshape(3)
        q = np.array(self.orientation, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(q)
        if not norm > 0:
            raise ValidationError("zero quaternion")
        q = q / norm
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @classmethod
    def from_matrix(cls, position, rotation) -> "Pose":
        return cls(position, Rotation.from_matrix(rotation).as_quat())

    @property
    def rotation(self) -> np.ndarray:
        return Rotation.from_quat(self.orientation).as_matrix()


@dataclass(frozen=True)
class PoseTrack(Sequence):
    """A pose sequence sampled at ``rate_hz``, stored as stacked arrays."""

    positions: np.ndarray  # (n, 3)
    rotations: np.ndarray  # (n, 3, 3), sensor-to-world
    rate_hz: float

    def __len__(self):
        return len(self.positions)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PoseTrack(self.positions[i], self.rotations[i], self.rate_hz)
        return Pose.from_matrix(self.positions[i], self.rotations[i])

    @classmethod
    def from_poses(cls, poses: Sequence[Pose], rate_hz: float) -> "PoseTrack":
        if isinstance(poses, PoseTrack):
            return poses
        pos = np.array([p.position for p in poses])
        rot = Rotation.from_quat(np.array([p.orientation for p in poses])).as_matrix()
        return cls(pos, rot, rate_hz)


# -- forward kinematics ------------------------------------------------------

def _chain(model: RobotModel, q) -> list[tuple[tuple, tuple]]:
    """Frame (rotation, origin) pairs for the base and all six links.

    Scalar arithmetic on purpose: IK calls this ~10^5 times per dataset
    and small-array numpy overhead dominates otherwise.
    """
    r = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    p = (0.0, 0.0, 0.0)
    frames = [(r, p)]
    for (a, ca, sa, d, off), qi in zip(model._dh_scalars, q):
        th = float(qi) + off
        ct, st = math.cos(th), math.sin(th)
        # columns of the link rotation and its translation
        b00, b01, b02 = ct, -st * ca, st * sa
        b10, b11, b12 = st, ct * ca, -ct * sa
        b21, b22 = sa, ca
        r00, r01, r02, r10, r11, r12, r20, r21, r22 = r
        p = (
            p[0] + r00 * a * ct + r01 * a * st + r02 * d,
            p[1] + r10 * a * ct + r11 * a * st + r12 * d,
            p[2] + r20 * a * ct + r21 * a * st + r22 * d,
        )
        r = (
            r00 * b00 + r01 * b10, r00 * b01 + r01 * b11 + r02 * b21, r00 * b02 + r01 * b12 + r02 * b22,
            r10 * b00 + r11 * b10, r10 * b01 + r11 * b11 + r12 * b21, r10 * b02 + r11 * b12 + r12 * b22,
            r20 * b00 + r21 * b10, r20 * b01 + r21 * b11 + r22 * b21, r20 * b02 + r21 * b12 + r22 * b22,
        )
        frames.append((r, p))
    return frames


def _to_matrix(frame) -> np.ndarray:
    r, p = frame
    T = np.eye(4)
    T[:3, :3] = np.array(r).reshape(3, 3)
    T[:3, 3] = p
    return T


def fk_matrix(model: RobotModel, q) -> np.ndarray:
    """Flange transform (4x4) without limit checks."""
    return _to_matrix(_chain(model, q)[-1])


def fk_batch(model: RobotModel, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized FK over ``(n, 6)`` joint rows: positions ``(n, 3)``, rotations ``(n, 3, 3)``."""
    qs = np.atleast_2d(np.asarray(qs, dtype=np.float64))
    n = len(qs)
    T = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
    for j, (a, alpha, d, off) in enumerate(model.dh_rows):
        th = qs[:, j] + off
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(alpha), np.sin(alpha)
        A = np.zeros((n, 4, 4))
        A[:, 0, 0], A[:, 0, 1], A[:, 0, 2], A[:, 0, 3] = ct, -st * ca, st * sa, a * ct
        A[:, 1, 0], A[:, 1, 1], A[:, 1, 2], A[:, 1, 3] = st, ct * ca, -ct * sa, a * st
        A[:, 2, 1], A[:, 2, 2], A[:, 2, 3] = sa, ca, d
        A[:, 3, 3] = 1.0
        T = T @ A
    return T[:, :3, 3], T[:, :3, :3]


def fk(model: RobotModel, joints) -> Pose:
    q = np.asarray(joints, dtype=np.float64)
    if q.shape != (6,):
        raise ValidationError(f"expected 6 joint values, got shape {q.shape}")
    if not model.within_limits(q, tol=1e-9):
        raise JointLimit(f"joints {q} outside limits")
    T = fk_matrix(model, q)
    return Pose.from_matrix(T[:3, 3], T[:3, :3])


def fk_jacobian(model: RobotModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Flange transform and the 6x6 geometric Jacobian (linear rows first)."""
    frames = _chain(model, q)
    px, py, pz = frames[-1][1]
    cols = []
    for r, o in frames[:6]:
        zx, zy, zz = r[2], r[5], r[8]
        dx, dy, dz = px - o[0], py - o[1], pz - o[2]
        cols.append((zy * dz - zz * dy, zz * dx - zx * dz, zx * dy - zy * dx, zx, zy, zz))
    return _to_matrix(frames[-1]), np.array(cols).T


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a rotation matrix."""
    cos = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos)
    if angle < 1e-7:
        return 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if np.pi - angle < 1e-4:
        return Rotation.from_matrix(R).as_rotvec()
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return v * (angle / (2.0 * np.sin(angle)))


def orientation_error(R_target: np.ndarray, R: np.ndarray) -> float:
    """Geodesic angle in radians between two rotation matrices."""
    return float(np.linalg.norm(rotation_log(R_target @ R.T)))


def computed_max_reach(model: RobotModel, steps: int = 721) -> float:
    """Farthest wrist-centre distance from the shoulder over joints 2 and 3's range."""
    q2, q3 = np.meshgrid(np.linspace(*model.joint_limits[1], steps),
                         np.linspace(*model.joint_limits[2], steps))
    qs = np.zeros((q2.size, 6))
    qs[:, 1], qs[:, 2] = q2.ravel(), q3.ravel()
    pos, rot = fk_batch(model, qs)
    wc = pos - model.flange_length * rot[:, :, 2]
    return float(np.max(np.linalg.norm(wc - model.shoulder, axis=1)))


# -- inverse kinematics ------------------------------------------------------

def _wrap_into_limits(model: RobotModel, q: np.ndarray, tol: float) -> np.ndarray:
    q = q.copy()
    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    for i in range(6):
        for shift in (0.0, -TWO_PI, TWO_PI):
            v = q[i] + shift
            if lo[i] - tol <= v <= hi[i] + tol:
                q[i] = min(max(v, lo[i]), hi[i])
                break
        else:
            raise JointLimit(f"joint {i + 1} converged to {np.degrees(q[i]):.2f} deg, outside limits")
    return q


def ik(model: RobotModel, target: Pose, seed_joints, *, damping: float = 0.01,
       step_clamp: float = 0.1, max_iter: int = 500, pos_tol: float = 1e-5,
       rot_tol: float = 1e-4, polish_iter: int = 5) -> np.ndarray:
    """Damped least-squares IK started from ``seed_joints``.

    Each step solves ``dq = J^T (J J^T + damping^2 I)^-1 e`` for the stacked
    position/rotation-vector error ``e`` and scales ``dq`` so no joint moves
    more than ``step_clamp`` rad. Once inside tolerance up to
    ``polish_iter`` more steps tighten the solution.
    """
    p_t = np.asarray(target.position, dtype=np.float64)
    R_t = target.rotation
    wc = p_t - model.flange_length * R_t[:, 2]
    if np.linalg.norm(wc - model.shoulder) > model.max_reach_m + REACH_MARGIN_M:
        raise Unreachable(f"target {p_t} is beyond the {model.max_reach_m} m reach")

    q = np.array(seed_joints, dtype=np.float64)
    lam2 = damping * damping
    converged_at = None
    for it in range(max_iter + polish_iter):
        T, J = fk_jacobian(model, q)
        e_p = p_t - T[:3, 3]
        e_r = rotation_log(R_t @ T[:3, :3].T)
        ep, er = np.linalg.norm(e_p), np.linalg.norm(e_r)
        if ep < pos_tol and er < rot_tol:
            if converged_at is None:
                converged_at = it
            if ep < 1e-12 and er < 1e-12 or it - converged_at >= polish_iter:
                break
        elif it >= max_iter:
            break
        e = np.concatenate([e_p, e_r])
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), e)
        peak = np.max(np.abs(dq))
        if peak > step_clamp:
            dq *= step_clamp / peak
        q = q + dq
    if converged_at is None:
        raise NoConvergence(
            f"no convergence in {max_iter} iterations (pos err {ep:.3g} m, rot err {er:.3g} rad)"
        )
    return _wrap_into_limits(model, q, tol=1e-6)


# -- trajectories ------------------------------------------------------------

@dataclass(frozen=True)
class MountRotation:
    """Fixed wrist adjustment applied on top of the writing orientation.

    Angles are composed as intrinsic rotations in ``order`` (default
    Y, then Z, then X).
    """

    rx_deg: float = 20.0
    ry_deg: float = 60.0
    rz_deg: float = 5.0
    order: str = "YZX"

    def __post_init__(self):
        for v in (self.rx_deg, self.ry_deg, self.rz_deg):
            if not -180.0 <= v <= 180.0:
                raise ValidationError(f"mount angle {v} outside [-180, 180]")
        if sorted(self.order) != ["X", "Y", "Z"]:
            raise ValidationError(f"order must be a permutation of XYZ, got {self.order!r}")

    def as_matrix(self) -> np.ndarray:
        by_axis = {"X": self.rx_deg, "Y": self.ry_deg, "Z": self.rz_deg}
        return Rotation.from_euler(self.order, [by_axis[a] for a in self.order], degrees=True).as_matrix()


# tool z into the writing plane (+x), tool x down, tool y along +y
WRITING_ORIENTATION = np.array([
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0],
])


def writing_orientation(model: RobotModel | None = None) -> np.ndarray:
    """Base flange orientation for writing, before any mount adjustment."""
    return WRITING_ORIENTATION.copy()


def tool_orientation(model: RobotModel, mount: MountRotation, wrist_angle_deg: float = 0.0) -> np.ndarray:
    """Writing orientation, then the mount rotation, then a roll about the tool axis."""
    roll = Rotation.from_euler("z", wrist_angle_deg, degrees=True).as_matrix()
    return writing_orientation(model) @ mount.as_matrix() @ roll


@dataclass(frozen=True)
class JointTrajectory:
    frames: np.ndarray  # (n, 6) rad
    rate_hz: float = 42.0
    tool_rotation: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        f = np.array(self.frames, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != 6 or len(f) < 1:
            raise ValidationError(f"frames must be (n, 6), got {f.shape}")
        if not self.rate_hz > 0:
            raise ValidationError("rate_hz must be positive")
        object.__setattr__(self, "frames", f)

    def __len__(self):
        return len(self.frames)

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate_hz

    def max_step(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.frames, axis=0))))

    def validate(self, model: RobotModel, max_step: float = 0.2) -> None:
        for i, q in enumerate(self.frames):
            if not model.within_limits(q, tol=1e-9):
                raise JointLimit(f"frame {i} outside joint limits")
        if self.max_step() >= max_step:
            raise ValidationError(f"joint step {self.max_step():.3f} rad exceeds {max_step} rad")

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s"] + [f"j{i}" for i in range(1, 7)])
        for k, q in enumerate(self.frames):
            w.writerow([repr(k / self.rate_hz)] + [repr(float(v)) for v in q])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def resample_path(points: np.ndarray, n: int) -> np.ndarray:
    """Fourier-resample an open path to ``n`` points.

    A linear ramp is removed before the transform and added back
    afterwards. Its slope is set by the one-step linear continuation of the
    last point, so the implied periodic extension has neither a jump nor a
    kink at the wrap (no ringing at the ends) and a uniform-speed line is
    reproduced exactly.
    """
    from .signals import _resample_axis

    pts = np.asarray(points, dtype=np.float64)
    m = len(pts)
    if n == m:
        return pts.copy()
    s_in = np.arange(m) / m
    s_out = np.arange(n) / n
    out = np.empty((n, pts.shape[1]))
    for k in range(pts.shape[1]):
        a = pts[:, k]
        slope = 2 * a[-1] - a[-2] - a[0]
        resid = a - (a[0] + slope * s_in)
        out[:, k] = _resample_axis(resid, n) + a[0] + slope * s_out
    return out


# elbow-up, wrist on the branch that keeps joint 4 far from its stops
DEFAULT_HOME = np.radians([0.0, 10.0, 10.0, -30.0, 50.0, -140.0])


def plan_joint_trajectory(model: RobotModel, traj, mount: MountRotation = MountRotation(),
                          out_rate_hz: float = 42.0, *, wrist_angle_deg: float = 0.0,
                          home=DEFAULT_HOME) -> JointTrajectory:
    """Resample a Cartesian path to ``out_rate_hz`` and solve IK frame by frame.

    The tool orientation is held fixed for the whole path. Frame 0 is
    seeded from ``home``; every later frame from the previous solution.
    """
    pts = np.asarray(traj.points, dtype=np.float64)
    n_out = int(round(len(pts) * out_rate_hz / traj.rate_hz))
    if n_out < 1:
        raise ValidationError("trajectory too short for the requested rate")
    path = resample_path(pts, n_out)
    R_tool = tool_orientation(model, mount, wrist_angle_deg)
    quat = Rotation.from_matrix(R_tool).as_quat()
    frames = np.empty((n_out, 6))
    q = np.asarray(home, dtype=np.float64)
    for i, p in enumerate(path):
        try:
            q = ik(model, Pose(p, quat), q)
        except (Unreachable, NoConvergence, JointLimit) as exc:
            raise PlanningFailed(i, exc) from exc
        frames[i] = q
    jt = JointTrajectory(frames, out_rate_hz, tool_rotation=R_tool)
    try:
        jt.validate(model)
    except (JointLimit, ValidationError) as exc:
        raise PlanningFailed(int(np.argmax(np.max(np.abs(np.diff(frames, axis=0)), axis=1))) + 1
                             if len(frames) > 1 else 0, exc) from exc
    return jt


def replay(model: RobotModel, jt: JointTrajectory, imu_rate_hz: float = 100.0) -> PoseTrack:
    """Cubic-interpolate joints to ``imu_rate_hz`` and run FK on every frame."""
    n_out = int(round(jt.duration_s * imu_rate_hz))
    t_out = np.arange(n_out) / imu_rate_hz
    if len(jt) == 1:
        q_out = np.repeat(jt.frames, n_out, axis=0)
    else:
        t_in = np.arange(len(jt)) / jt.rate_hz
        if len(jt) < 4:
            q_out = np.column_stack([np.interp(t_out, t_in, jt.frames[:, j]) for j in range(6)])
        else:
            q_out = CubicSpline(t_in, jt.frames, axis=0)(t_out)
    pos, rot = fk_batch(model, q_out)
    return PoseTrack(pos, rot, imu_rate_hz)
