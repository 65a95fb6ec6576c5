"""Repeated warm-started training on robot data, testing on human-like data only."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import ProvenanceViolation, ValidationError
from .evaluation import ConfusionMatrix, IterationRecord, RunReport
from .mlp import (MlpModel, Standardizer, TrainResult, cross_entropy, forward, init_model,
                  split_indices, train_once as _train_once)
from .signals import channel_kind as _channel_kind
from .validation import check_features, check_labels, check_provenance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 100
    max_epochs: int = 20
    patience_epochs: int = 10
    val_fraction: float = 0.2
    learning_rate: float = 0.01
    batch_size: int = 32
    seed: int = 0
    hidden_width: int = 64

    def __post_init__(self):
        if not 0 < self.val_fraction < 1:
            raise ValidationError("val_fraction must lie in (0, 1)")
        if self.patience_epochs > self.max_epochs:
            raise ValidationError("patience_epochs must not exceed max_epochs")
        for name in ("iterations", "max_epochs", "patience_epochs", "batch_size", "hidden_width"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FeatureSet:
    """Feature rows with their labels, provenance tags and sample ids."""

    X: np.ndarray
    y: np.ndarray
    provenance: list[str]
    ids: list[str] = field(default_factory=list)
    channel_kind: str = "velocity"

    def __post_init__(self):
        self.X = check_features(self.X, n_features=None)
        self.y = check_labels(self.y, len(self.X))
        self.provenance = list(self.provenance)
        if len(self.provenance) != len(self.X):
            raise ValidationError("one provenance tag per row is required")
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.X))]
        self.channel_kind = _channel_kind(self.channel_kind)

    def __len__(self):
        return len(self.X)

    def subset(self, idx) -> "FeatureSet":
        idx = np.asarray(idx, dtype=int)
        return FeatureSet(self.X[idx], self.y[idx], [self.provenance[i] for i in idx],
                          [self.ids[i] for i in idx], self.channel_kind)

    @classmethod
    def from_samples(cls, samples, kind: str, preprocessor=None) -> "FeatureSet":
        """Preprocess gesture samples into a feature set for one channel."""
        from .preprocessing import GesturePreprocessor

        pre = preprocessor or GesturePreprocessor(channel=kind)
        samples = list(samples)
        return cls(pre.fit_transform(samples), [s.label for s in samples],
                   [s.provenance for s in samples], [s.sample_id for s in samples], kind)


def train_once(model: MlpModel, train_set: FeatureSet | tuple, val_set: FeatureSet | tuple,
               cfg: TrainConfig = TrainConfig(), *, rng=None, val_loss_fn=None) -> TrainResult:
    """One early-stopped run; accepts feature sets or ``(X, y)`` pairs."""
    def xy(s):
        return (s.X, s.y) if isinstance(s, FeatureSet) else s

    return _train_once(model, xy(train_set), xy(val_set), max_epochs=cfg.max_epochs,
                       patience=cfg.patience_epochs, learning_rate=cfg.learning_rate,
                       batch_size=cfg.batch_size, rng=rng, val_loss_fn=val_loss_fn)


def run_protocol(robot_set: FeatureSet, human_set: FeatureSet, cfg: TrainConfig = TrainConfig(), *,
                 model: MlpModel | None = None,
                 on_iteration: Callable[[int, MlpModel, MlpModel], None] | None = None,
                 val_loss_fn=None) -> tuple[RunReport, MlpModel, Standardizer]:
    """Train ``cfg.iterations`` times, each from the previous run's parameters.

    Every iteration draws a fresh random train/validation split of the
    robot rows, standardizes with the training split's statistics, trains
    with early stopping, and scores on the human-like rows. Any split row
    not tagged ``robot`` aborts the run with :class:`ProvenanceViolation`.

    Returns the report, the final model and the final standardizer.
    ``on_iteration(i, start_model, end_model)`` observes the warm-start
    chain.
    """
    if len(robot_set) == 0 or len(human_set) == 0:
        raise ValidationError("robot and human sets must both be non-empty")
    if robot_set.channel_kind != human_set.channel_kind:
        raise ValidationError(
            f"channel mismatch: robot {robot_set.channel_kind}, human {human_set.channel_kind}"
        )
    if robot_set.X.shape[1] != human_set.X.shape[1]:
        raise ValidationError("robot and human feature widths differ")
    check_provenance(human_set.provenance, "human-like", "test set")

    n_out = 10
    current = model.copy() if model is not None else init_model(
        cfg.hidden_width, cfg.seed, robot_set.X.shape[1], n_out)
    root = np.random.SeedSequence(cfg.seed)
    records = []
    scaler = None
    log.info("training on %d robot rows only; %d human-like rows reserved for testing",
             len(robot_set), len(human_set))
    for i, child in enumerate(root.spawn(cfg.iterations), start=1):
        rng = np.random.default_rng(child)
        tr, va = split_indices(len(robot_set), cfg.val_fraction, rng)
        train, val = robot_set.subset(tr), robot_set.subset(va)
        for what, part in (("training split", train), ("validation split", val)):
            try:
                check_provenance(part.provenance, "robot", what)
            except ProvenanceViolation as exc:
                raise ProvenanceViolation(f"iteration {i}: {exc}") from None
        scaler = Standardizer.fit(train.X)
        start = current
        res = train_once(start, (scaler.transform(train.X), train.y), (scaler.transform(val.X), val.y),
                         cfg, rng=rng, val_loss_fn=val_loss_fn)
        current = res.model
        if on_iteration is not None:
            on_iteration(i, start, current)

        probs = forward(current, scaler.transform(human_set.X)).reshape(len(human_set), -1)
        pred = np.argmax(probs, axis=1)
        cm = ConfusionMatrix.from_predictions(human_set.y, pred)
        records.append(IterationRecord(
            index=i,
            test_accuracy=cm.accuracy(),
            test_loss=cross_entropy(probs, human_set.y),
            confusion=cm,
            epochs_run=res.epochs_run,
            best_val_loss=res.best_val_loss,
            n_train=len(train),
            n_val=len(val),
            init_digest=start.digest(),
            final_digest=current.digest(),
        ))
        log.debug("iteration %d: acc %.4f, epochs %d", i, cm.accuracy(), res.epochs_run)
    echo = {"train": cfg.to_dict(), "n_robot": len(robot_set), "n_human": len(human_set)}
    return RunReport(robot_set.channel_kind, records, echo), current, scaler
