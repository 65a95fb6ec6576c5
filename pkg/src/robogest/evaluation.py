"""Confusion-matrix accounting and report rendering.

Matrices follow the published layout: rows are predicted digits, columns
are true digits, and percentages are normalized per column so every
column totals 100%.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyClass, IncompatibleReport, ValidationError

N_CLASSES = 10
REPORT_SCHEMA = "robogest.run_report"
REPORT_VERSION = 1

# Published robot-trained / human-tested results (rows predicted, columns true),
# kept as reference annotations for comparison reports.
PUBLISHED_REFERENCE = {
    "acceleration": {
        "mean_accuracy_pct": 51.46,
        "std_pct": 28.60,
        "confusion_pct": [
            [90, 0, 0, 1, 9.9, 1.2, 76, 0, 0, 0],
            [0, 79.7, 0.6, 2.3, 9, 0.4, 0, 65, 0.2, 9.6],
            [0, 0.6, 42.4, 14.6, 0, 0, 0, 2.4, 39.3, 0.4],
            [9.9, 0, 11.1, 59.1, 0, 15.6, 0, 0, 0, 0],
            [0, 1.4, 0, 0, 78.9, 0, 0, 0.7, 12.1, 83.6],
            [0, 0, 0, 9.2, 0.1, 69.3, 0, 0, 0, 4.9],
            [0.1, 0.1, 14.8, 11.4, 0, 0, 24, 0, 0, 0],
            [0, 18.2, 15.8, 0, 0.1, 0, 0, 31.9, 0, 0],
            [0, 0, 10, 2.4, 1.6, 13.5, 0, 0, 38.5, 0.7],
            [0, 0, 5.3, 0, 0.4, 0, 0, 0, 9.9, 0.8],
        ],
    },
    "velocity": {
        "mean_accuracy_pct": 63.68,
        "std_pct": 28.79,
        "confusion_pct": [
            [90, 0, 0, 0, 0.9, 0, 69.4, 0, 0.9, 0],
            [0, 75, 0, 23.5, 9.1, 0, 0, 70.9, 0, 9.5],
            [0, 0, 91.1, 0, 10, 0, 0, 0, 68.6, 0],
            [9.7, 0, 0, 75.6, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 80, 0, 0.1, 0, 0, 53.8],
            [0, 0, 0, 0, 0, 99.5, 0.1, 0, 0, 0.8],
            [0.3, 0, 0.3, 0, 0, 0, 30.3, 0, 0.2, 0],
            [0, 6.6, 8.6, 0, 0, 0, 0, 29.1, 0, 0],
            [0, 0, 0, 0.6, 0, 0, 0.1, 0, 30.3, 0],
            [0, 18.4, 0, 0.3, 0, 0.5, 0, 0, 0, 35.9],
        ],
    },
    "trajectory": {
        "mean_accuracy_pct": 59.15,
        "std_pct": 27.86,
        "confusion_pct": [
            [85.9, 0, 0, 0, 0, 0, 81.4, 0, 27.6, 0],
            [0, 71.8, 0, 0, 25.5, 0, 0, 38.3, 0, 10],
            [0, 0, 80.3, 0, 0, 0, 0, 0, 0, 0],
            [1.6, 0, 0, 28.8, 3.9, 0, 0.8, 0, 0.6, 0],
            [0, 0, 0, 0, 52.8, 0, 0, 0, 0, 30.7],
            [4.4, 8.6, 0, 0, 5.5, 99, 0, 5.2, 0, 7.4],
            [0.2, 0, 8.1, 0, 0, 0, 8, 0, 2.7, 0],
            [5.6, 10.1, 0, 45.4, 2.1, 0, 0, 56.5, 0, 12.6],
            [2.3, 0, 11.6, 25.8, 0.4, 1, 9.8, 0, 69.1, 0],
            [0, 9.5, 0, 0, 9.8, 0, 0, 0, 0, 39.3],
        ],
    },
}


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (10, 10) ints, [predicted, true]

    def __post_init__(self):
        c = np.array(self.counts)
        if c.shape != (N_CLASSES, N_CLASSES):
            raise ValidationError(f"confusion matrix must be {N_CLASSES}x{N_CLASSES}, got {c.shape}")
        if np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValidationError("confusion counts must be non-negative integers")
        c = c.astype(np.int64)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        c = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(c, (np.asarray(y_pred, dtype=int), np.asarray(y_true, dtype=int)), 1)
        return cls(c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0


def normalize_columns(cm) -> np.ndarray:
    """Percent of each true class (column) assigned to each predicted class."""
    counts = cm.counts if isinstance(cm, ConfusionMatrix) else np.asarray(cm, dtype=np.float64)
    totals = counts.sum(axis=0)
    if np.any(totals <= 0):
        missing = [int(i) for i in np.flatnonzero(totals <= 0)]
        raise EmptyClass(f"no test samples for true class(es) {missing}")
    return counts / totals * 100.0


def aggregate(records) -> np.ndarray:
    """Pool counts over iterations, then column-normalize."""
    records = list(records)
    if not records:
        raise ValidationError("aggregate needs at least one record")
    total = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for r in records:
        total += _counts(r)
    return normalize_columns(total)


def summarize(records) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1) of per-iteration test accuracy."""
    acc = np.array([_accuracy(r) for r in records], dtype=np.float64)
    if len(acc) == 0:
        raise ValidationError("summarize needs at least one record")
    std = float(acc.std(ddof=1)) if len(acc) > 1 else 0.0
    return float(acc.mean()), std


def per_class_summary(pct: np.ndarray) -> tuple[float, float]:
    """Mean and sample std of the diagonal of a column-normalized matrix.

    This is how the published footers are computed: they equal the mean and
    n - 1 standard deviation of the ten per-digit recall percentages.
    """
    d = np.diag(np.asarray(pct, dtype=np.float64))
    return float(d.mean()), float(d.std(ddof=1))


def _counts(r) -> np.ndarray:
    c = getattr(r, "confusion", r)
    return c.counts if isinstance(c, ConfusionMatrix) else np.asarray(c, dtype=np.int64)


def _accuracy(r) -> float:
    return float(r.test_accuracy if hasattr(r, "test_accuracy") else r)


@dataclass
class IterationRecord:
    index: int
    test_accuracy: float
    test_loss: float
    confusion: ConfusionMatrix
    epochs_run: int
    best_val_loss: float = float("nan")
    n_train: int = 0
    n_val: int = 0
    init_digest: str = ""
    final_digest: str = ""

    def __post_init__(self):
        if not isinstance(self.confusion, ConfusionMatrix):
            self.confusion = ConfusionMatrix(self.confusion)
        if abs(self.confusion.accuracy() - self.test_accuracy) > 1e-12:
            raise ValidationError("test_accuracy disagrees with the confusion matrix trace")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "test_accuracy": self.test_accuracy,
            "test_loss": self.test_loss,
            "confusion": self.confusion.counts.tolist(),
            "epochs_run": self.epochs_run,
            "best_val_loss": self.best_val_loss,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "init_digest": self.init_digest,
            "final_digest": self.final_digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(**{**d, "confusion": ConfusionMatrix(d["confusion"])})


@dataclass
class RunReport:
    channel_kind: str
    records: list[IterationRecord]
    config_echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.records:
            raise ValidationError("a run report needs at least one iteration")

    @property
    def mean_accuracy(self) -> float:
        return summarize(self.records)[0]

    @property
    def std_accuracy(self) -> float:
        return summarize(self.records)[1]

    @property
    def aggregate_confusion_pct(self) -> np.ndarray:
        return aggregate(self.records)

    def to_dict(self) -> dict:
        pct = self.aggregate_confusion_pct
        macro, class_std = per_class_summary(pct)
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_VERSION,
            "channel": self.channel_kind,
            "iterations": len(self.records),
            "mean_accuracy_pct": 100.0 * self.mean_accuracy,
            "std_accuracy_pct": 100.0 * self.std_accuracy,
            "macro_accuracy_pct": macro,
            "per_class_std_pct": class_std,
            "confusion_pct": pct.tolist(),
            "config_echo": self.config_echo,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("schema") != REPORT_SCHEMA or d.get("version") != REPORT_VERSION:
            raise IncompatibleReport(
                f"expected {REPORT_SCHEMA} v{REPORT_VERSION}, got {d.get('schema')} v{d.get('version')}"
            )
        try:
            records = [IterationRecord.from_dict(r) for r in d["records"]]
            channel = d["channel"]
        except (KeyError, TypeError) as exc:
            raise IncompatibleReport(f"malformed report: {exc}") from exc
        if not records:
            raise IncompatibleReport("report contains no iterations")
        return cls(channel, records, d.get("config_echo", {}))

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise IncompatibleReport(f"not a JSON report: {exc}") from exc


# -- rendering ---------------------------------------------------------------

def _pct(v: float) -> str:
    return f"{v:.1f}".rstrip("0").rstrip(".") + "%"


def render_table(pct, title: str = "", mean_pct: float | None = None, std_pct: float | None = None,
                 extra_footer: Sequence[str] = ()) -> str:
    """Plain-text table: header of true digits, one row per predicted digit, a Total row."""
    pct = np.asarray(pct, dtype=np.float64)
    width = 7
    lines = []
    if title:
        lines.append(title)
    rule = "-" * (6 + width * N_CLASSES)
    lines.append(rule)
    lines.append("     |" + "".join(f"{j:>{width}}" for j in range(N_CLASSES)))
    lines.append(rule)
    for i in range(N_CLASSES):
        cells = []
        for j in range(N_CLASSES):
            cell = _pct(pct[i, j])
            cells.append(f"{('*' + cell) if i == j else cell:>{width}}")
        lines.append(f"{i:>4} |" + "".join(cells))
    lines.append(rule)
    totals = pct.sum(axis=0)
    lines.append("Total|" + "".join(f"{_pct(t):>{width}}" for t in totals))
    lines.append(rule)
    if mean_pct is not None:
        lines.append(f"Average accuracy: {mean_pct:.2f}%")
    if std_pct is not None:
        lines.append(f"STD: {std_pct:.2f}")
    lines.extend(extra_footer)
    return "\n".join(lines) + "\n"


def table_csv(pct) -> str:
    """CSV with the same arrangement as the text table, values in percent."""
    pct = np.asarray(pct, dtype=np.float64)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["predicted\\true"] + [str(j) for j in range(N_CLASSES)])
    for i in range(N_CLASSES):
        w.writerow([str(i)] + [f"{v:.4f}" for v in pct[i]])
    w.writerow(["Total"] + [f"{v:.4f}" for v in pct.sum(axis=0)])
    return buf.getvalue()


def render_report(report: RunReport) -> str:
    d = report.to_dict()
    footer = [f"Per-class mean / STD: {d['macro_accuracy_pct']:.2f}% / {d['per_class_std_pct']:.2f}"]
    ref = PUBLISHED_REFERENCE.get(report.channel_kind)
    if ref is not None:
        footer.append(
            f"Reference (published, physical robot/watch): {ref['mean_accuracy_pct']:.2f}% / STD {ref['std_pct']:.2f}"
        )
    return render_table(
        d["confusion_pct"],
        title=f"{report.channel_kind.capitalize()} ({d['iterations']} iterations)",
        mean_pct=d["mean_accuracy_pct"],
        std_pct=d["std_accuracy_pct"],
        extra_footer=footer,
    )


def render_comparison(reports: Iterable[RunReport]) -> str:
    """Every report's table followed by a mean-accuracy ranking across channels."""
    reports = list(reports)
    if not reports:
        raise ValidationError("nothing to compare")
    parts = [render_report(r) for r in reports]
    ranked = sorted(reports, key=lambda r: (-r.mean_accuracy, r.channel_kind))
    lines = ["Channel comparison (mean +/- STD over iterations):"]
    for r in ranked:
        ref = PUBLISHED_REFERENCE.get(r.channel_kind)
        note = f"   [published: {ref['mean_accuracy_pct']:.2f}%]" if ref else ""
        lines.append(f"  {r.channel_kind:<13}{100 * r.mean_accuracy:6.2f}% +/- {100 * r.std_accuracy:5.2f}{note}")
    lines.append("Ranking: " + " > ".join(r.channel_kind for r in ranked))
    return "\n".join(parts) + "\n" + "\n".join(lines) + "\n"


def accuracy_curves_csv(reports: Iterable[RunReport]) -> str:
    """Per-iteration accuracy, one column per channel."""
    reports = list(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration"] + [r.channel_kind for r in reports])
    n = max(len(r.records) for r in reports)
    for i in range(n):
        w.writerow([i + 1] + [repr(r.records[i].test_accuracy) if i < len(r.records) else "" for r in reports])
    return buf.getvalue()
