"""Input checks shared by the estimators and the protocol runner."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ValidationError
from .signals import SampledSignal3


def check_features(X, n_features: int | None = None) -> np.ndarray:
    """2-D finite float64 matrix, optionally with a fixed column count."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_labels(y, n_samples: int, n_classes: int = 10) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n_samples:
        raise ValidationError(f"expected {n_samples} labels, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValidationError("labels must be integers")
        y = y.astype(np.int64)
    if len(y) and (y.min() < 0 or y.max() >= n_classes):
        raise ValidationError(f"labels must lie in [0, {n_classes})")
    return y.astype(np.int64)


def check_signals(X) -> list[SampledSignal3]:
    """Accept a sequence of signals, or gesture samples, and return it as a list."""
    if isinstance(X, (SampledSignal3, np.ndarray)):
        raise ValidationError("expected a sequence of signals, not a single array")
    items = list(X)
    if not items:
        raise ValidationError("no signals given")
    return items


def check_provenance(provenance: Sequence[str], expected: str, what: str) -> None:
    from .errors import ProvenanceViolation

    bad = [i for i, p in enumerate(provenance) if p != expected]
    if bad:
        raise ProvenanceViolation(
            f"{len(bad)} sample(s) in the {what} are not {expected!r} (first index {bad[0]})"
        )
