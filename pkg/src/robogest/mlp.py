"""Three-layer perceptron (input, one hidden layer, softmax output) trained with mini-batch SGD.

The functional core (:func:`init_model`, :func:`forward`,
:func:`loss_and_grads`, :func:`train_once`) is what the training protocol
drives. :class:`MLPGestureClassifier` wraps the same core in the
scikit-learn estimator API.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .errors import EmptySplit, ValidationError
from .signals import FEATURE_LENGTH, FeatureVector
from .validation import check_features, check_labels

N_CLASSES = 10


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # [(n_in, H), (H, n_out)]
    biases: list[np.ndarray]  # [(H,), (n_out,)]
    hidden_activation: str = "relu"

    def __post_init__(self):
        if len(self.weights) != 2 or len(self.biases) != 2:
            raise ValidationError("an MLP here has exactly one hidden layer")
        (w1, w2), (b1, b2) = self.weights, self.biases
        if w1.shape[1] != w2.shape[0] or b1.shape != (w1.shape[1],) or b2.shape != (w2.shape[1],):
            raise ValidationError("inconsistent layer shapes")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.hidden_activation!r}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0], self.weights[0].shape[1], self.weights[1].shape[1]]

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.hidden_activation)

    def digest(self) -> str:
        """SHA-256 over the raw parameter bytes; equal digests mean bit-identical parameters."""
        h = hashlib.sha256()
        for a in (*self.weights, *self.biases):
            h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "hidden_activation": self.hidden_activation,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        return cls([np.array(w, dtype=np.float64) for w in d["weights"]],
                   [np.array(b, dtype=np.float64) for b in d["biases"]],
                   d.get("hidden_activation", "relu"))


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0).astype(z.dtype)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {"relu": (_relu, _relu_grad), "tanh": (np.tanh, _tanh_grad)}


def init_model(hidden_width: int = 64, seed: int = 0, n_inputs: int = FEATURE_LENGTH,
               n_outputs: int = N_CLASSES, hidden_activation: str = "relu") -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    if int(hidden_width) != hidden_width or hidden_width < 1:
        raise ValidationError(f"hidden width must be a positive integer, got {hidden_width}")
    rng = np.random.default_rng(seed)
    sizes = [n_inputs, int(hidden_width), n_outputs]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, hidden_activation)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(model: MlpModel, X: np.ndarray):
    act, _ = ACTIVATIONS[model.hidden_activation]
    z1 = X @ model.weights[0] + model.biases[0]
    h = act(z1)
    z2 = h @ model.weights[1] + model.biases[1]
    return z1, h, softmax(z2)


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for one vector (returns ``(n_out,)``) or a batch (``(n, n_out)``)."""
    if isinstance(x, FeatureVector):
        x = x.values
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    probs = _forward_cache(model, np.atleast_2d(X))[2]
    return probs[0] if single else probs


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.clip(p, 1e-300, None))))


def loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradients ``([dW1, dW2], [db1, db2])``."""
    _, grad_act = ACTIVATIONS[model.hidden_activation]
    z1, h, probs = _forward_cache(model, X)
    n = len(y)
    loss = cross_entropy(probs, y)
    d2 = probs.copy()
    d2[np.arange(n), y] -= 1.0
    d2 /= n
    dW2 = h.T @ d2
    db2 = d2.sum(axis=0)
    d1 = (d2 @ model.weights[1].T) * grad_act(z1)
    dW1 = X.T @ d1
    db1 = d1.sum(axis=0)
    return loss, [dW1, dW2], [db1, db2]


def sgd_step(model: MlpModel, X: np.ndarray, y: np.ndarray, learning_rate: float) -> float:
    loss, gw, gb = loss_and_grads(model, X, y)
    for w, g in zip(model.weights, gw):
        w -= learning_rate * g
    for b, g in zip(model.biases, gb):
        b -= learning_rate * g
    return loss


def evaluate_loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    return cross_entropy(forward(model, X).reshape(len(y), -1), y)


@dataclass
class TrainResult:
    model: MlpModel
    epochs_run: int
    best_val_loss: float
    best_epoch: int
    val_history: list[float] = field(default_factory=list)


def train_once(model: MlpModel, train: tuple[np.ndarray, np.ndarray], val: tuple[np.ndarray, np.ndarray], *,
               max_epochs: int = 20, patience: int = 10, learning_rate: float = 0.01,
               batch_size: int = 32, rng: np.random.Generator | None = None,
               val_loss_fn: Callable[[MlpModel, int], float] | None = None) -> TrainResult:
    """SGD with early stopping on validation loss.

    Training stops once ``patience`` consecutive epochs fail to strictly
    lower the best validation loss, or after ``max_epochs``. The returned
    model holds the parameters of the best epoch; the input model is left
    untouched. ``val_loss_fn(model, epoch)`` replaces the validation
    evaluation, which lets tests script the loss curve.
    """
    X, y = train
    Xv, yv = val
    if len(X) == 0 or len(Xv) == 0:
        raise EmptySplit("train and validation splits must both be non-empty")
    rng = np.random.default_rng(0) if rng is None else rng
    work = model.copy()
    best, best_loss, best_epoch = work.copy(), np.inf, 0
    history = []
    stale = 0
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(len(X))
        for start in range(0, len(X), batch_size):
            idx = order[start:start + batch_size]
            sgd_step(work, X[idx], y[idx], learning_rate)
        loss = val_loss_fn(work, epoch) if val_loss_fn is not None else evaluate_loss(work, Xv, yv)
        history.append(float(loss))
        if loss < best_loss:
            best, best_loss, best_epoch, stale = work.copy(), float(loss), epoch, 0
        else:
            stale += 1
            if stale >= patience:
                break
    return TrainResult(best, epoch, best_loss, best_epoch, history)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring with statistics from one fitting set."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        scale = X.std(axis=0)
        scale[scale < 1e-12] = 1.0
        return cls(X.mean(axis=0), scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


def split_indices(n: int, val_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random ``(train, val)`` index split with ``round(n * val_fraction)`` validation rows."""
    if not 0 < val_fraction < 1:
        raise ValidationError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    n_val = int(round(n * val_fraction))
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


class MLPGestureClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn classifier over 300-value gesture feature vectors.

    Each call to :meth:`fit` is one early-stopped training run on a fresh
    random train/validation split. With ``warm_start=True`` a refit
    continues from the previous parameters, which is how the repeated
    training protocol chains its iterations.
    """

    def __init__(self, hidden_width=64, learning_rate=0.01, batch_size=32, max_epochs=20,
                 patience=10, val_fraction=0.2, standardize=True, warm_start=False,
                 hidden_activation="relu", n_classes=N_CLASSES, random_state=0):
        self.n_classes = n_classes
        self.hidden_width = hidden_width
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.standardize = standardize
        self.warm_start = warm_start
        self.hidden_activation = hidden_activation
        self.random_state = random_state

    def fit(self, X, y):
        X = check_features(X, n_features=None)
        y = check_labels(y, len(X), self.n_classes)
        self.classes_ = np.arange(self.n_classes)
        self._n_fits = getattr(self, "_n_fits", 0) if self.warm_start else 0
        rng = np.random.default_rng([int(self.random_state), self._n_fits])
        tr, va = split_indices(len(X), self.val_fraction, rng)
        self.scaler_ = Standardizer.fit(X[tr]) if self.standardize else Standardizer(np.zeros(X.shape[1]), np.ones(X.shape[1]))
        Xs = self.scaler_.transform(X)
        if self.warm_start and hasattr(self, "model_"):
            start = self.model_
        else:
            start = init_model(self.hidden_width, int(self.random_state), X.shape[1], self.n_classes,
                               self.hidden_activation)
        res = train_once(start, (Xs[tr], y[tr]), (Xs[va], y[va]), max_epochs=self.max_epochs,
                         patience=self.patience, learning_rate=self.learning_rate,
                         batch_size=self.batch_size, rng=rng)
        self.model_ = res.model
        self.epochs_run_ = res.epochs_run
        self.best_val_loss_ = res.best_val_loss
        self.n_features_in_ = X.shape[1]
        self._n_fits += 1
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_features(X, n_features=self.n_features_in_)
        return forward(self.model_, self.scaler_.transform(X)).reshape(len(X), -1)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)
