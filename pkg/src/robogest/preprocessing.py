"""Scikit-learn transformer turning raw gesture channels into 300-value feature rows."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .signals import (FEATURE_SAMPLES_PER_AXIS, FilterSpec, SampledSignal3, channel_kind,
                      lowpass, resample_fourier, to_feature_vector)
from .validation import check_signals


class GesturePreprocessor(TransformerMixin, BaseEstimator):
    """Low-pass filter, Fourier-resample and flatten one channel per sample.

    ``X`` is a sequence of :class:`~robogest.imu.GestureSample` (the
    ``channel`` is picked from each) or of bare
    :class:`~robogest.signals.SampledSignal3`. Stateless: ``fit`` only
    validates parameters.
    """

    def __init__(self, channel="velocity", cutoff_hz=20.0, order=4, zero_phase=True,
                 n_samples=FEATURE_SAMPLES_PER_AXIS):
        self.channel = channel
        self.cutoff_hz = cutoff_hz
        self.order = order
        self.zero_phase = zero_phase
        self.n_samples = n_samples

    @property
    def filter_spec(self) -> FilterSpec:
        return FilterSpec(self.cutoff_hz, self.order, self.zero_phase)

    def fit(self, X=None, y=None):
        self.filter_spec  # validates
        self.channel_kind_ = channel_kind(self.channel)
        self.n_features_out_ = 3 * self.n_samples
        return self

    def _signal(self, item) -> SampledSignal3:
        if isinstance(item, SampledSignal3):
            return item
        return item.channels[channel_kind(self.channel)]

    def transform_one(self, item) -> SampledSignal3:
        return resample_fourier(lowpass(self._signal(item), self.filter_spec), self.n_samples)

    def transform(self, X) -> np.ndarray:
        items = check_signals(X)
        kind = channel_kind(self.channel)
        rows = []
        for item in items:
            sig = self.transform_one(item)
            if self.n_samples == FEATURE_SAMPLES_PER_AXIS:
                rows.append(to_feature_vector(sig, kind).values)
            else:
                rows.append(sig.data.reshape(-1))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array([f"{a}{i}" for a in "xyz" for i in range(self.n_samples)], dtype=object)
