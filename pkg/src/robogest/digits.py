"""Digit stroke templates, human-like pen trajectories and the augmentation grid."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import UnknownDigit, ValidationError

DIGITS = tuple(range(10))
SYNTH_RATE_HZ = 200.0
MIN_DURATION_S = 2.0
MAX_DURATION_S = 4.0
# writing-plane centre in the robot base frame; the plane is x = const
PLANE_CENTER_M = (0.38, 0.0, 0.40)
DEFAULT_PLANE_SCALE_M = 0.15


@dataclass(frozen=True)
class DigitTemplate:
    digit: int
    control_points: np.ndarray  # (k, 2) in the unit box
    canonical_duration_s: float
    corners: tuple[int, ...] = ()  # interior control points where the pen stops

    def __post_init__(self):
        if self.digit not in DIGITS:
            raise UnknownDigit(f"digit must be 0-9, got {self.digit}")
        cp = np.array(self.control_points, dtype=np.float64)
        if cp.ndim != 2 or cp.shape[1] != 2 or not 4 <= len(cp) <= 64:
            raise ValidationError(f"digit {self.digit}: need 4-64 planar control points")
        if np.any(cp < 0) or np.any(cp > 1):
            raise ValidationError(f"digit {self.digit}: control points leave the unit box")
        if not MIN_DURATION_S <= self.canonical_duration_s <= MAX_DURATION_S:
            raise ValidationError(f"digit {self.digit}: canonical duration outside [2, 4] s")
        corners = tuple(sorted(int(c) for c in self.corners))
        if any(not 0 < c < len(cp) - 1 for c in corners) or len(set(corners)) != len(corners):
            raise ValidationError(f"digit {self.digit}: corners must be distinct interior indices")
        cp.flags.writeable = False
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "corners", corners)

    def segments(self) -> list[np.ndarray]:
        """Control points split at the corners; neighbours share the corner point."""
        bounds = [0, *self.corners, len(self.control_points) - 1]
        return [self.control_points[a:b + 1] for a, b in zip(bounds[:-1], bounds[1:])]


def load_templates(path: str | Path | None = None) -> dict[int, DigitTemplate]:
    """Read a template file: ``{"templates": [{digit, control_points, canonical_duration_s, corners?}]}``.

    A bare JSON array of template objects is accepted too, so recorded
    strokes can be dropped in without the wrapper.
    """
    if path is None:
        text = resources.files("robogest").joinpath("data/digit_templates.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    entries = doc["templates"] if isinstance(doc, dict) else doc
    out = {}
    for e in entries:
        t = DigitTemplate(int(e["digit"]), e["control_points"], float(e["canonical_duration_s"]),
                          tuple(e.get("corners", ())))
        if t.digit in out:
            raise ValidationError(f"duplicate template for digit {t.digit}")
        out[t.digit] = t
    return out


@lru_cache(maxsize=1)
def _builtin_templates() -> dict[int, DigitTemplate]:
    return load_templates()


def digit_template(digit: int) -> DigitTemplate:
    if digit not in DIGITS:
        raise UnknownDigit(f"digit must be 0-9, got {digit}")
    return _builtin_templates()[digit]


@dataclass(frozen=True)
class AugmentationParams:
    speed_scale: float = 1.0
    size_scale: float = 1.0
    wrist_angle_deg: float = 0.0
    rotation_deg: float = 0.0

    def __post_init__(self):
        for name in ("speed_scale", "size_scale"):
            v = getattr(self, name)
            if not 0.25 <= v <= 4.0:
                raise ValidationError(f"{name} must lie in [0.25, 4], got {v}")

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


@dataclass(frozen=True)
class AugmentationRanges:
    """Closed intervals the grid levels (and random human draws) span."""

    speed: tuple[float, float] = (0.75, 1.25)
    wrist_angle_deg: tuple[float, float] = (-15.0, 15.0)
    size: tuple[float, float] = (0.8, 1.2)
    rotation_deg: tuple[float, float] = (-10.0, 10.0)

    def levels(self, lo_hi: tuple[float, float], n: int) -> list[float]:
        lo, hi = lo_hi
        if n == 1:
            return [(lo + hi) / 2.0]
        return [float(v) for v in np.linspace(lo, hi, n)]

    def sample(self, rng: np.random.Generator) -> AugmentationParams:
        return AugmentationParams(
            speed_scale=float(rng.uniform(*self.speed)),
            size_scale=float(rng.uniform(*self.size)),
            wrist_angle_deg=float(rng.uniform(*self.wrist_angle_deg)),
            rotation_deg=float(rng.uniform(*self.rotation_deg)),
        )


def augmentation_grid(levels_per_param: int = 3,
                      ranges: AugmentationRanges = AugmentationRanges()) -> list[AugmentationParams]:
    """Full Cartesian product over speed, wrist angle, size and rotation, in that order."""
    if int(levels_per_param) != levels_per_param or not 1 <= levels_per_param <= 5:
        raise ValidationError(f"levels_per_param must be 1-5, got {levels_per_param}")
    n = int(levels_per_param)
    axes = [ranges.levels(ranges.speed, n), ranges.levels(ranges.wrist_angle_deg, n),
            ranges.levels(ranges.size, n), ranges.levels(ranges.rotation_deg, n)]
    return [
        AugmentationParams(speed_scale=s, size_scale=z, wrist_angle_deg=w, rotation_deg=r)
        for s, w, z, r in itertools.product(*axes)
    ]


@dataclass(frozen=True)
class CartesianTrajectory:
    points: np.ndarray  # (n, 3) metres
    rate_hz: float = SYNTH_RATE_HZ
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise ValidationError("trajectory needs at least 2 three-dimensional points")
        if np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1)) >= 0.1:
            raise ValidationError("consecutive trajectory points are 0.1 m or more apart")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate_hz


def rotate_planar(points, deg: float) -> np.ndarray:
    """Rotate ``(n, 2)`` points counter-clockwise about the origin."""
    th = np.radians(deg)
    c, s = np.cos(th), np.sin(th)
    return np.asarray(points, dtype=np.float64) @ np.array([[c, s], [-s, c]])


def catmull_rom(points, samples_per_segment: int = 200, alpha: float = 0.5) -> np.ndarray:
    """Dense centripetal Catmull-Rom curve through every control point.

    Phantom end points are mirror images of the second and penultimate
    points, so the curve starts and ends exactly on the first and last
    control points.
    """
    P = np.asarray(points, dtype=np.float64)
    if len(P) < 2:
        raise ValidationError("a spline needs at least 2 points")
    P = np.vstack([2 * P[0] - P[1], P, 2 * P[-1] - P[-2]])
    out = []
    u = np.linspace(0.0, 1.0, samples_per_segment, endpoint=False)[:, None]
    for i in range(1, len(P) - 2):
        p0, p1, p2, p3 = P[i - 1], P[i], P[i + 1], P[i + 2]
        t0 = 0.0
        t1 = t0 + max(np.linalg.norm(p1 - p0), 1e-9) ** alpha
        t2 = t1 + max(np.linalg.norm(p2 - p1), 1e-9) ** alpha
        t3 = t2 + max(np.linalg.norm(p3 - p2), 1e-9) ** alpha
        t = t1 + u * (t2 - t1)
        a1 = (t1 - t) / (t1 - t0) * p0 + (t - t0) / (t1 - t0) * p1
        a2 = (t2 - t) / (t2 - t1) * p1 + (t - t1) / (t2 - t1) * p2
        a3 = (t3 - t) / (t3 - t2) * p2 + (t - t2) / (t3 - t2) * p3
        b1 = (t2 - t) / (t2 - t0) * a1 + (t - t0) / (t2 - t0) * a2
        b2 = (t3 - t) / (t3 - t1) * a2 + (t - t1) / (t3 - t1) * a3
        out.append((t2 - t) / (t2 - t1) * b1 + (t - t1) / (t2 - t1) * b2)
    out.append(P[-2][None, :])
    return np.vstack(out)


def minimum_jerk(tau: np.ndarray) -> np.ndarray:
    """Normalized minimum-jerk position profile, 0 -> 1 over tau in [0, 1]."""
    tau = np.clip(tau, 0.0, 1.0)
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)


MINJERK_PEAK_ACCEL = 10.0 / np.sqrt(3.0)  # max |s''| of the profile above


def _jitter(rng: np.random.Generator, tau: np.ndarray, amplitude: float, duration_s: float) -> np.ndarray:
    """Sum-of-sines planar wobble, tapered to zero at both ends."""
    out = np.zeros((len(tau), 2))
    t = tau * duration_s
    for k in range(2):
        for _ in range(3):
            f = rng.uniform(0.3, 1.5)
            out[:, k] += rng.normal(0.0, amplitude / np.sqrt(3.0)) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return out * (np.sin(np.pi * tau) ** 2)[:, None]


def _arc(curve: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(curve, axis=0), axis=1))])


def segment_timing(template: DigitTemplate, duration_s: float) -> tuple[list[np.ndarray], np.ndarray]:
    """Spline each stroke segment and share ``duration_s`` among them.

    Durations grow with the square root of segment length, so short
    flicks are slower per metre than long sweeps, as in handwriting.
    """
    curves = [catmull_rom(seg) for seg in template.segments()]
    lengths = np.array([_arc(c)[-1] for c in curves])
    weights = np.sqrt(lengths)
    return curves, duration_s * weights / weights.sum()


def minimum_jerk_peak_accel(template: DigitTemplate, params: AugmentationParams,
                            plane_scale_m: float = DEFAULT_PLANE_SCALE_M,
                            rate_hz: float = SYNTH_RATE_HZ) -> float:
    """Largest analytic tangential acceleration (m/s^2) over the stroke segments."""
    duration = float(np.clip(template.canonical_duration_s / params.speed_scale, MIN_DURATION_S, MAX_DURATION_S))
    n = int(round(duration * rate_hz))
    curves, seg_t = segment_timing(template, (n - 1) / rate_hz)
    scale = params.size_scale * plane_scale_m
    return max(MINJERK_PEAK_ACCEL * _arc(c)[-1] * scale / t ** 2 for c, t in zip(curves, seg_t))


def synthesize_trajectory(template: DigitTemplate, params: AugmentationParams = AugmentationParams(),
                          plane_scale_m: float = DEFAULT_PLANE_SCALE_M, seed: int = 0, *,
                          jitter: float = 0.0, rate_hz: float = SYNTH_RATE_HZ,
                          plane_center=PLANE_CENTER_M) -> CartesianTrajectory:
    """Pen-tip path for one digit execution in the vertical writing plane.

    Each stroke segment (template split at its corners) is a spline
    traversed with a minimum-jerk arc-length profile, so the pen comes to
    rest at corners. Total time is ``canonical_duration_s / speed_scale``
    clamped to 2-4 s. ``jitter`` is a wobble amplitude in unit-box units
    and therefore scales with the figure.
    """
    if not 0.05 < plane_scale_m <= 0.5:
        raise ValidationError(f"plane_scale_m must lie in (0.05, 0.5], got {plane_scale_m}")
    raw = template.canonical_duration_s / params.speed_scale
    duration = float(np.clip(raw, MIN_DURATION_S, MAX_DURATION_S))
    n = int(round(duration * rate_hz))
    t = np.arange(n) / rate_hz

    curves, seg_t = segment_timing(template, t[-1])
    starts = np.concatenate([[0.0], np.cumsum(seg_t)[:-1]])
    k = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(curves) - 1)
    uv = np.empty((n, 2))
    for j, curve in enumerate(curves):
        sel = k == j
        arc = _arc(curve)
        s = minimum_jerk((t[sel] - starts[j]) / seg_t[j]) * arc[-1]
        uv[sel, 0] = np.interp(s, arc, curve[:, 0])
        uv[sel, 1] = np.interp(s, arc, curve[:, 1])
    if jitter > 0:
        tau = t / t[-1]
        uv = uv + _jitter(np.random.default_rng(seed), tau, jitter, duration)

    uv = rotate_planar(uv - 0.5, params.rotation_deg) * (params.size_scale * plane_scale_m)
    cx, cy, cz = plane_center
    # facing +x from the robot base, the writer's right is -y
    pts = np.column_stack([np.full(n, cx), cy - uv[:, 0], cz + uv[:, 1]])
    meta = {"duration_requested_s": raw, "duration_clamped": bool(raw != duration),
            "segments": len(curves)}
    return CartesianTrajectory(pts, rate_hz, meta)
