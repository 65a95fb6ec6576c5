"""Simulated wrist IMU: pose sequences in, sensor-frame acceleration and derived channels out."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import TooShort, ValidationError
from .robot import Pose, PoseTrack
from .signals import CHANNEL_KINDS, SampledSignal3, integrate

if TYPE_CHECKING:
    from .digits import AugmentationParams
    from .robot import JointTrajectory

PROVENANCES = ("human-like", "robot")
LOWPASS_CUTOFF_HZ = 20.0


@dataclass(frozen=True)
class ImuConfig:
    rate_hz: float = 100.0
    gravity_mps2: float = 9.81
    include_gravity: bool = True
    noise_std: float | tuple[float, float, float] = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.rate_hz > 2 * LOWPASS_CUTOFF_HZ:
            raise ValidationError(f"rate_hz must exceed {2 * LOWPASS_CUTOFF_HZ} Hz, got {self.rate_hz}")
        if np.any(np.asarray(self.noise_std) < 0):
            raise ValidationError("noise_std must be non-negative")

    @property
    def gravity_world(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.gravity_mps2])


def _as_track(poses, rate_hz: float) -> PoseTrack:
    if isinstance(poses, PoseTrack):
        return poses
    return PoseTrack.from_poses(list(poses), rate_hz)


def second_difference(x: np.ndarray, h: float) -> np.ndarray:
    """Second derivative along axis 0: 3-point central inside, 4-point one-sided at the ends."""
    out = np.empty_like(x)
    out[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / h ** 2
    # 2x0 - 5x1 + 4x2 - x3, written in differences so a constant gives exactly zero
    out[0] = (2.0 * (x[0] - x[1]) - 3.0 * (x[1] - x[2]) + (x[2] - x[3])) / h ** 2
    out[-1] = (2.0 * (x[-1] - x[-2]) - 3.0 * (x[-2] - x[-3]) + (x[-3] - x[-4])) / h ** 2
    return out


def to_sensor_frame(rotations: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Apply ``R^T v`` row-wise, with ``R`` the sensor-to-world rotation."""
    return np.einsum("kji,kj->ki", rotations, vectors)


def poses_to_acceleration(poses: PoseTrack | Sequence[Pose], cfg: ImuConfig = ImuConfig()) -> SampledSignal3:
    """Accelerometer reading in the sensor frame.

    World linear acceleration from second differences of position, plus
    the world gravity vector ``(0, 0, -g)`` when enabled, rotated into
    each pose's frame, plus seeded white noise.
    """
    track = _as_track(poses, cfg.rate_hz)
    if len(track) < 5:
        raise TooShort("poses_to_acceleration needs at least 5 poses")
    acc_w = second_difference(track.positions, 1.0 / cfg.rate_hz)
    if cfg.include_gravity:
        acc_w = acc_w + cfg.gravity_world
    acc_s = to_sensor_frame(track.rotations, acc_w)
    noise = np.broadcast_to(np.asarray(cfg.noise_std, dtype=np.float64), (3,))
    if np.any(noise > 0):
        rng = np.random.default_rng(cfg.seed)
        acc_s = acc_s + rng.normal(size=acc_s.shape) * noise
    return SampledSignal3.from_array(acc_s.T, cfg.rate_hz)


def derive_channels(accel: SampledSignal3) -> tuple[SampledSignal3, SampledSignal3]:
    """Velocity and trajectory by detrended single and double integration.

    Used unchanged for every provenance so the classifier never sees a
    domain-specific transform.
    """
    velocity = integrate(accel, detrend=True)
    trajectory = integrate(velocity, detrend=True)
    return velocity, trajectory


@dataclass
class GestureSample:
    label: int
    provenance: str
    channels: dict[str, SampledSignal3]
    params: "AugmentationParams"
    duration_s: float
    sample_id: str = ""
    meta: dict = field(default_factory=dict)
    joints: "JointTrajectory | None" = None  # robot samples only

    def __post_init__(self):
        if self.label not in range(10):
            raise ValidationError(f"label must be 0-9, got {self.label}")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"provenance must be one of {PROVENANCES}, got {self.provenance!r}")
        if set(self.channels) != set(CHANNEL_KINDS):
            raise ValidationError(f"channels must be exactly {CHANNEL_KINDS}")
        lens = {len(s) for s in self.channels.values()}
        rates = {s.rate_hz for s in self.channels.values()}
        if len(lens) != 1 or len(rates) != 1:
            raise ValidationError("all channels must share length and rate")
        if not 2.0 - 1e-9 <= self.duration_s <= 4.0 + 1e-9:
            raise ValidationError(f"duration {self.duration_s} s outside [2, 4]")


def make_sample(label: int, provenance: str, poses, params, cfg: ImuConfig = ImuConfig(), *,
                sample_id: str = "", meta: dict | None = None) -> GestureSample:
    """Simulate the watch for one execution and build all three channels.

    The stored acceleration channel includes gravity (as the watch reports
    it). Velocity and trajectory are integrated from a gravity-free copy
    obtained by removing the known gravity vector in the sensor frame.
    """
    track = _as_track(poses, cfg.rate_hz)
    accel = poses_to_acceleration(track, cfg)
    if cfg.include_gravity:
        g_s = to_sensor_frame(track.rotations, np.broadcast_to(cfg.gravity_world, track.positions.shape))
        free = SampledSignal3.from_array(accel.data - g_s.T, cfg.rate_hz)
    else:
        free = accel
    velocity, trajectory = derive_channels(free)
    return GestureSample(
        label=int(label),
        provenance=provenance,
        channels={"acceleration": accel, "velocity": velocity, "trajectory": trajectory},
        params=params,
        duration_s=len(track) / cfg.rate_hz,
        sample_id=sample_id,
        meta=dict(meta or {}),
    )
