import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from robogest.errors import InvalidFilterSpec, ValidationError
from robogest.mlp import MLPGestureClassifier
from robogest.preprocessing import GesturePreprocessor
from robogest.signals import SampledSignal3, preprocess


def sig(n=300, rate=100.0, seed=0):
    t = np.arange(n) / rate
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.3, 3.0, 3)
    return SampledSignal3(*[np.sin(2 * np.pi * f * t) for f in freqs], rate)


def test_output_shape():
    X = GesturePreprocessor().fit_transform([sig(250), sig(400, seed=1), sig(333, seed=2)])
    assert X.shape == (3, 300)


def test_constant_signal_gives_constant_rows():
    c = SampledSignal3(np.full(200, 1.5), np.full(200, -2.0), np.zeros(200), 100.0)
    row = GesturePreprocessor().fit_transform([c])[0]
    np.testing.assert_allclose(row[:100], 1.5, atol=1e-9)
    np.testing.assert_allclose(row[100:200], -2.0, atol=1e-9)
    np.testing.assert_allclose(row[200:], 0.0, atol=1e-9)


def test_axis_blocks_are_contiguous():
    s = sig()
    row = GesturePreprocessor().fit_transform([s])[0]
    ref = preprocess(s)
    np.testing.assert_allclose(row, np.concatenate([ref.x, ref.y, ref.z]))


def test_idempotent_on_band_limited_input():
    # Whole-cycle sines at 100 samples, far inside the passband, pass almost unchanged
    t = np.arange(100) / 100.0
    s = SampledSignal3(np.sin(2 * np.pi * t), np.cos(4 * np.pi * t), np.sin(6 * np.pi * t), 100.0)
    row = GesturePreprocessor().fit_transform([s])[0]
    np.testing.assert_allclose(row, s.data.reshape(-1), atol=1e-2)


def test_picks_channel_from_gesture_samples():
    class Fake:
        channels = {"velocity": sig(seed=3), "acceleration": sig(seed=4)}

    v = GesturePreprocessor(channel="vel").fit_transform([Fake()])
    a = GesturePreprocessor(channel="accel").fit_transform([Fake()])
    np.testing.assert_allclose(v, GesturePreprocessor().fit_transform([sig(seed=3)]))
    assert not np.allclose(v, a)


def test_feature_names():
    names = GesturePreprocessor().fit([]).get_feature_names_out()
    assert len(names) == 300 and names[0] == "x0" and names[100] == "y0" and names[-1] == "z99"


def test_params_and_clone():
    p = GesturePreprocessor(channel="trajectory", cutoff_hz=15.0)
    assert p.get_params()["cutoff_hz"] == 15.0
    assert clone(p).get_params() == p.get_params()


def test_bad_filter_rejected_at_fit():
    with pytest.raises(InvalidFilterSpec):
        GesturePreprocessor(cutoff_hz=-1.0).fit([])


def test_single_array_rejected():
    with pytest.raises(ValidationError):
        GesturePreprocessor().fit_transform(sig())


def test_pipeline_with_classifier():
    rng = np.random.default_rng(0)
    t = np.arange(300) / 100.0
    items, labels = [], []
    for label in range(10):
        for _ in range(6):
            f = 0.4 + 0.3 * label
            items.append(SampledSignal3(np.sin(2 * np.pi * f * t) + 0.05 * rng.normal(size=300),
                                        np.cos(2 * np.pi * f * t), np.zeros(300), 100.0))
            labels.append(label)
    pipe = make_pipeline(GesturePreprocessor(), MLPGestureClassifier(hidden_width=32, random_state=0,
                                                                     learning_rate=0.05))
    pipe.fit(items, labels)
    assert pipe.score(items, labels) > 0.8
