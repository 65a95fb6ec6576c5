"""Three-axis sampled signals and the preprocessing primitives applied to them.

Everything here is a pure function over :class:`SampledSignal3`; nothing
holds state. Filtering is a zero-phase Butterworth low-pass, resampling is
done in the frequency domain, and the calculus helpers move between the
acceleration, velocity and trajectory channels.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidFilterSpec, InvalidLength, TooShort, ValidationError, WrongLength

CHANNEL_KINDS = ("acceleration", "velocity", "trajectory")
CHANNEL_ALIASES = {
    "accel": "acceleration",
    "vel": "velocity",
    "traj": "trajectory",
    "acceleration": "acceleration",
    "velocity": "velocity",
    "trajectory": "trajectory",
}
FEATURE_SAMPLES_PER_AXIS = 100
FEATURE_LENGTH = 3 * FEATURE_SAMPLES_PER_AXIS


def channel_kind(name: str) -> str:
    """Normalize a channel name or short alias (``accel``/``vel``/``traj``)."""
    try:
        return CHANNEL_ALIASES[name]
    except KeyError:
        raise ValidationError(f"unknown channel kind {name!r}") from None


@dataclass(frozen=True)
class SampledSignal3:
    """Uniformly sampled x/y/z series sharing one sample rate."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    rate_hz: float

    def __post_init__(self):
        axes = [np.array(a, dtype=np.float64).reshape(-1) for a in (self.x, self.y, self.z)]
        if not (len(axes[0]) == len(axes[1]) == len(axes[2])):
            raise ValidationError("x, y and z must have equal length")
        if len(axes[0]) < 2:
            raise TooShort("a signal needs at least 2 samples")
        if not (np.isfinite(self.rate_hz) and self.rate_hz > 0):
            raise ValidationError(f"rate_hz must be positive, got {self.rate_hz}")
        if not all(np.all(np.isfinite(a)) for a in axes):
            raise ValidationError("signal contains non-finite samples")
        for name, a in zip("xyz", axes):
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))

    @classmethod
    def from_array(cls, data, rate_hz: float) -> "SampledSignal3":
        """Build from a ``(3, n)`` or ``(n, 3)`` array."""
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2 or 3 not in arr.shape:
            raise ValidationError(f"expected a (3, n) or (n, 3) array, got shape {arr.shape}")
        if arr.shape[0] != 3:
            arr = arr.T
        return cls(arr[0], arr[1], arr[2], rate_hz)

    @property
    def data(self) -> np.ndarray:
        return np.vstack([self.x, self.y, self.z])

    def __len__(self) -> int:
        return len(self.x)

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate_hz

    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.rate_hz

    def map_axes(self, fn, rate_hz: float | None = None) -> "SampledSignal3":
        out = [fn(a) for a in (self.x, self.y, self.z)]
        return SampledSignal3(*out, self.rate_hz if rate_hz is None else rate_hz)


@dataclass(frozen=True)
class FeatureVector:
    """Flat 300-value classifier input laid out as ``[x*100 | y*100 | z*100]``."""

    values: np.ndarray
    channel_kind: str

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if len(v) != FEATURE_LENGTH:
            raise WrongLength(f"feature vector must have {FEATURE_LENGTH} values, got {len(v)}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channel_kind", channel_kind(self.channel_kind))

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = FEATURE_SAMPLES_PER_AXIS
        return self.values[:n], self.values[n:2 * n], self.values[2 * n:]


@dataclass(frozen=True)
class FilterSpec:
    cutoff_hz: float = 20.0
    order: int = 4
    zero_phase: bool = True

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise InvalidFilterSpec(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if int(self.order) != self.order or self.order < 1:
            raise InvalidFilterSpec(f"order must be a positive integer, got {self.order}")


def lowpass(sig: SampledSignal3, spec: FilterSpec = FilterSpec()) -> SampledSignal3:
    """Butterworth low-pass each axis independently.

    The digital filter comes from the bilinear transform with pre-warping.
    In zero-phase mode it is run forward and backward over an odd
    reflection of ``3 * order`` samples at each edge, so the output has no
    group delay and squared magnitude response.
    """
    nyquist = sig.rate_hz / 2.0
    if spec.cutoff_hz >= nyquist:
        raise InvalidFilterSpec(
            f"cutoff {spec.cutoff_hz} Hz is not below Nyquist ({nyquist} Hz)"
        )
    sos = sps.butter(int(spec.order), spec.cutoff_hz, btype="low", fs=sig.rate_hz, output="sos")
    if spec.zero_phase:
        padlen = min(3 * int(spec.order), len(sig) - 1)

        def run(a):
            return sps.sosfiltfilt(sos, a, padtype="odd", padlen=padlen)
    else:
        zi = sps.sosfilt_zi(sos)

        def run(a):
            return sps.sosfilt(sos, a, zi=zi * a[0])[0]

    return sig.map_axes(run)


def _resample_axis(a: np.ndarray, n: int) -> np.ndarray:
    m = len(a)
    if n == m:
        return a.copy()
    spec_in = np.fft.rfft(a)
    spec_out = np.zeros(n // 2 + 1, dtype=complex)
    k = min(m, n)
    keep = k // 2 + 1
    spec_out[:keep] = spec_in[:keep]
    if k % 2 == 0:
        # The shorter length's Nyquist bin stands for both +k/2 and -k/2.
        if n < m:
            spec_out[k // 2] *= 2.0
        else:
            spec_out[k // 2] *= 0.5
    return np.fft.irfft(spec_out, n) * (n / m)


def resample_fourier(sig: SampledSignal3, n: int) -> SampledSignal3:
    """Resample every axis to ``n`` points by truncating or zero-padding its spectrum.

    The signal is treated as one period of a periodic sequence, so the
    first output sample coincides with the first input sample and the new
    rate is ``rate_hz * n / len(sig)``.
    """
    if int(n) != n or n < 2:
        raise InvalidLength(f"target length must be an integer >= 2, got {n}")
    n = int(n)
    return sig.map_axes(lambda a: _resample_axis(a, n), rate_hz=sig.rate_hz * n / len(sig))


def differentiate(sig: SampledSignal3) -> SampledSignal3:
    """Time derivative: central differences inside, one-sided at both ends."""
    if len(sig) < 3:
        raise TooShort("differentiate needs at least 3 samples")
    h = 1.0 / sig.rate_hz
    return sig.map_axes(lambda a: np.gradient(a, h, edge_order=1))


def integrate(sig: SampledSignal3, detrend: bool = False) -> SampledSignal3:
    """Cumulative trapezoidal integral starting at zero.

    With ``detrend`` the least-squares line of each axis is removed
    afterwards, which cancels the drift from integrating a biased input.
    """
    h = 1.0 / sig.rate_hz

    def run(a):
        out = cumulative_trapezoid(a, dx=h, initial=0.0)
        if detrend:
            out = sps.detrend(out, type="linear")
        return out

    return sig.map_axes(run)


def to_feature_vector(sig: SampledSignal3, kind: str) -> FeatureVector:
    if len(sig) != FEATURE_SAMPLES_PER_AXIS:
        raise WrongLength(
            f"each axis must have {FEATURE_SAMPLES_PER_AXIS} samples, got {len(sig)}; resample first"
        )
    return FeatureVector(np.concatenate([sig.x, sig.y, sig.z]), kind)


def from_feature_vector(fv: FeatureVector, rate_hz: float) -> SampledSignal3:
    return SampledSignal3(*fv.axes(), rate_hz)


def preprocess(sig: SampledSignal3, spec: FilterSpec = FilterSpec(),
               n: int = FEATURE_SAMPLES_PER_AXIS) -> SampledSignal3:
    """Low-pass then Fourier-resample to ``n`` samples per axis."""
    return resample_fourier(lowpass(sig, spec), n)


# -- CSV persistence ---------------------------------------------------------

SIGNAL_HEADER = ("t_s", "x", "y", "z")


def _fmt(v: float) -> str:
    return repr(float(v))


def signal_to_csv(sig: SampledSignal3, path: str | Path | None = None) -> str:
    """Serialize as ``t_s,x,y,z`` rows; floats are written round-trip exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SIGNAL_HEADER)
    for t, x, y, z in zip(sig.times(), sig.x, sig.y, sig.z):
        w.writerow((_fmt(t), _fmt(x), _fmt(y), _fmt(z)))
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def signal_from_csv(path: str | Path, rate_hz: float | None = None) -> SampledSignal3:
    """Read a ``t_s,x,y,z`` file. The rate is inferred from ``t_s`` unless given."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != SIGNAL_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(SIGNAL_HEADER)}")
    arr = np.array(rows[1:], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise TooShort(f"{path}: fewer than 2 samples")
    t = arr[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValidationError(f"{path}: t_s must increase monotonically")
    if rate_hz is None:
        rate_hz = 1.0 / float(np.mean(dt))
    if not np.allclose(dt, 1.0 / rate_hz, rtol=1e-6, atol=1e-9):
        raise ValidationError(f"{path}: t_s is not uniform at {rate_hz} Hz")
    return SampledSignal3(arr[:, 1], arr[:, 2], arr[:, 3], rate_hz)
