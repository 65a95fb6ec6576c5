"""Builds the robot-replay and human-like gesture sets.

Robot samples: template -> pen path -> 42 Hz joint plan -> 100 Hz replay
-> IMU. Human-like samples skip the robot: the pen path is sampled
directly at 100 Hz and the wrist carries a slow random sway on top of
the same mount orientation.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import signal as sps
from scipy.spatial.transform import Rotation

from .digits import (DEFAULT_PLANE_SCALE_M, DIGITS, AugmentationParams, AugmentationRanges,
                     augmentation_grid, digit_template, synthesize_trajectory)
from .errors import PlanningFailed, ValidationError
from .imu import GestureSample, ImuConfig, make_sample
from .robot import (MountRotation, PoseTrack, irb120_model, plan_joint_trajectory, replay,
                    resample_path, tool_orientation)

log = logging.getLogger(__name__)

STREAM_ROBOT = 1
STREAM_HUMAN = 2


@dataclass(frozen=True)
class GenerationConfig:
    digits: tuple[int, ...] = DIGITS
    human_per_digit: int = 10
    robot_levels: int = 3
    ranges: AugmentationRanges = AugmentationRanges()
    plane_scale_m: float = DEFAULT_PLANE_SCALE_M
    mount: MountRotation = MountRotation()
    joint_rate_hz: float = 42.0
    imu_rate_hz: float = 100.0
    gravity_mps2: float = 9.81
    robot_noise_std: float = 0.02
    human_noise_std: float = 0.05
    human_jitter: float = 0.008  # unit-box units
    wrist_sway_deg: float = 3.0
    wrist_sway_band_hz: float = 1.0
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if any(d not in DIGITS for d in self.digits) or len(set(self.digits)) != len(self.digits):
            raise ValidationError(f"digits must be distinct values in 0-9, got {self.digits}")
        if self.human_per_digit < 1:
            raise ValidationError("human_per_digit must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["digits"] = list(self.digits)
        d.pop("n_jobs")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        d = dict(d)
        if "ranges" in d:
            d["ranges"] = AugmentationRanges(**{k: tuple(v) for k, v in d["ranges"].items()})
        if "mount" in d:
            d["mount"] = MountRotation(**d["mount"])
        if "digits" in d:
            d["digits"] = tuple(d["digits"])
        return cls(**d)


def sample_seed(seed: int, stream: int, digit: int, index: int) -> int:
    """Independent per-sample seed derived from the global one."""
    return int(np.random.SeedSequence([seed, stream, digit, index]).generate_state(1)[0])


def wrist_sway(rng: np.random.Generator, n: int, rate_hz: float, std_deg: float, band_hz: float) -> np.ndarray:
    """Band-limited random-walk rotation vectors ``(n, 3)`` with per-axis std ``std_deg``."""
    if std_deg <= 0:
        return np.zeros((n, 3))
    walk = np.cumsum(rng.normal(size=(n, 3)), axis=0)
    sos = sps.butter(2, band_hz, fs=rate_hz, output="sos")
    smooth = sps.sosfiltfilt(sos, walk, axis=0, padtype="odd", padlen=min(6, n - 1))
    smooth -= smooth.mean(axis=0)
    scale = smooth.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return smooth / scale * np.radians(std_deg)


def robot_sample(digit: int, params: AugmentationParams, index: int, cfg: GenerationConfig,
                 model=None) -> GestureSample:
    model = model or irb120_model()
    seed = sample_seed(cfg.seed, STREAM_ROBOT, digit, index)
    traj = synthesize_trajectory(digit_template(digit), params, cfg.plane_scale_m, seed)
    jt = plan_joint_trajectory(model, traj, cfg.mount, cfg.joint_rate_hz,
                               wrist_angle_deg=params.wrist_angle_deg)
    track = replay(model, jt, cfg.imu_rate_hz)
    imu = ImuConfig(cfg.imu_rate_hz, cfg.gravity_mps2, True, cfg.robot_noise_std, seed)
    sample = make_sample(digit, "robot", track, params, imu, sample_id=f"robot-{digit}-{index:03d}",
                         meta={"seed": seed, **traj.meta})
    sample.joints = jt
    return sample


def human_sample(digit: int, index: int, cfg: GenerationConfig, model=None) -> GestureSample:
    model = model or irb120_model()
    seed = sample_seed(cfg.seed, STREAM_HUMAN, digit, index)
    rng = np.random.default_rng(seed)
    params = cfg.ranges.sample(rng)
    traj = synthesize_trajectory(digit_template(digit), params, cfg.plane_scale_m,
                                 int(rng.integers(2 ** 31)), jitter=cfg.human_jitter)
    n = int(round(len(traj) * cfg.imu_rate_hz / traj.rate_hz))
    positions = resample_path(traj.points, n)
    base = tool_orientation(model, cfg.mount, params.wrist_angle_deg)
    sway = Rotation.from_rotvec(wrist_sway(rng, n, cfg.imu_rate_hz, cfg.wrist_sway_deg,
                                           cfg.wrist_sway_band_hz)).as_matrix()
    track = PoseTrack(positions, base @ sway, cfg.imu_rate_hz)
    imu = ImuConfig(cfg.imu_rate_hz, cfg.gravity_mps2, True, cfg.human_noise_std, seed)
    return make_sample(digit, "human-like", track, params, imu, sample_id=f"human-{digit}-{index:03d}",
                       meta={"seed": seed, **traj.meta})


def _run(jobs, n_jobs: int):
    if n_jobs == 1:
        return [fn(*args) for fn, args in jobs]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(fn)(*args) for fn, args in jobs)


def _robot_job(digit, params, index, cfg):
    try:
        return robot_sample(digit, params, index, cfg)
    except PlanningFailed as exc:
        return exc, digit, index, params


def generate_robot_set(cfg: GenerationConfig = GenerationConfig()) -> list[GestureSample]:
    """Every template digit replayed over the full augmentation grid.

    Raises :class:`PlanningFailed` naming every failing sample if any plan
    fails; the grid must be complete.
    """
    grid = augmentation_grid(cfg.robot_levels, cfg.ranges)
    jobs = [(_robot_job, (d, p, i, cfg)) for d in cfg.digits for i, p in enumerate(grid)]
    out = _run(jobs, cfg.n_jobs)
    failed = [r for r in out if isinstance(r, tuple)]
    if failed:
        for exc, d, i, p in failed:
            log.error("robot sample digit=%d index=%d params=%s failed: %s", d, i, p.to_dict(), exc)
        first = failed[0][0]
        raise PlanningFailed(first.index, f"{len(failed)} robot sample(s) failed; first: {first.cause}")
    return out


def generate_human_set(per_digit: int = 10, seed: int = 0,
                       cfg: GenerationConfig | None = None) -> list[GestureSample]:
    """``per_digit`` human-like executions of every digit with random augmentation draws."""
    if per_digit < 1:
        raise ValidationError("per_digit must be at least 1")
    cfg = replace(cfg or GenerationConfig(), human_per_digit=per_digit, seed=seed)
    jobs = [(human_sample, (d, i, cfg)) for d in cfg.digits for i in range(per_digit)]
    return _run(jobs, cfg.n_jobs)
