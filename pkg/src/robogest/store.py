"""On-disk layout for datasets, feature stores and model checkpoints.

Dataset::

    <root>/manifest.json
    <root>/<provenance>/<digit>/<sample-id>/accel.csv, vel.csv, traj.csv, meta.json
    <root>/robot/<digit>/<sample-id>/joints.csv          (robot samples only)

Feature store::

    <root>/index.json            row order, labels, provenance, filter settings
    <root>/<channel>.npy         float64 (n_rows, 300), one file per channel

Checkpoint: a single JSON file with layer sizes, parameters and the
standardization statistics. Everything is written with sorted keys and
round-trip float formatting so reruns are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .digits import AugmentationParams
from .errors import RobogestError, ValidationError
from .imu import PROVENANCES, GestureSample
from .mlp import MlpModel, Standardizer
from .preprocessing import GesturePreprocessor
from .protocol import FeatureSet
from .signals import CHANNEL_KINDS, FilterSpec, signal_from_csv, signal_to_csv

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = "robogest.dataset"
MANIFEST_VERSION = 1
FEATURES_SCHEMA = "robogest.features"
FEATURES_VERSION = 1
CHECKPOINT_SCHEMA = "robogest.checkpoint"
CHECKPOINT_VERSION = 1

CHANNEL_UNITS = {"acceleration": "m/s^2", "velocity": "m/s", "trajectory": "m"}
CHANNEL_FILES = {"acceleration": "accel.csv", "velocity": "vel.csv", "trajectory": "traj.csv"}


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- dataset -----------------------------------------------------------------

def write_sample(root: Path, sample: GestureSample) -> dict:
    """Write one sample's files and return its manifest entry."""
    rel = Path(sample.provenance) / str(sample.label) / sample.sample_id
    d = root / rel
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for kind, name in CHANNEL_FILES.items():
        signal_to_csv(sample.channels[kind], d / name)
        files[kind] = (rel / name).as_posix()
    if sample.joints is not None:
        sample.joints.to_csv(d / "joints.csv")
        files["joints"] = (rel / "joints.csv").as_posix()
    rate = sample.channels["acceleration"].rate_hz
    meta = {
        "sample_id": sample.sample_id,
        "label": sample.label,
        "provenance": sample.provenance,
        "params": sample.params.to_dict(),
        "duration_s": sample.duration_s,
        "rate_hz": rate,
        "units": CHANNEL_UNITS,
        "meta": sample.meta,
    }
    dump_json(meta, d / "meta.json")
    files["meta"] = (rel / "meta.json").as_posix()
    return {"sample_id": sample.sample_id, "path": rel.as_posix(), "label": sample.label,
            "provenance": sample.provenance, "params": sample.params.to_dict(),
            "duration_s": sample.duration_s, "rate_hz": rate, "files": files}


def write_dataset(root: str | Path, samples, generator_config: dict) -> dict:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = [write_sample(root, s) for s in samples]
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": MANIFEST_VERSION,
        "config_hash": hashlib.sha256(json.dumps(generator_config, sort_keys=True).encode()).hexdigest(),
        "config": generator_config,
        "counts": {p: sum(e["provenance"] == p for e in entries) for p in PROVENANCES},
        "entries": entries,
    }
    validate_manifest(manifest, root)
    dump_json(manifest, root / "manifest.json")
    return manifest


def validate_manifest(manifest: dict, root: str | Path) -> None:
    root = Path(root)
    if manifest.get("schema") != MANIFEST_SCHEMA or manifest.get("version") != MANIFEST_VERSION:
        raise ValidationError(f"{root}: not a v{MANIFEST_VERSION} dataset manifest")
    seen_paths, seen_ids = set(), set()
    for e in manifest["entries"]:
        if e["provenance"] not in PROVENANCES:
            raise ValidationError(f"{e['sample_id']}: unknown provenance {e['provenance']!r}")
        if e["sample_id"] in seen_ids:
            raise ValidationError(f"duplicate sample id {e['sample_id']}")
        seen_ids.add(e["sample_id"])
        for f in e["files"].values():
            if f in seen_paths:
                raise ValidationError(f"duplicate path {f}")
            seen_paths.add(f)
            if not (root / f).is_file():
                raise ValidationError(f"missing file {root / f}")


def load_manifest(root: str | Path) -> dict:
    root = Path(root)
    path = root / "manifest.json"
    if not path.is_file():
        raise ValidationError(f"no manifest.json under {root}")
    manifest = json.loads(path.read_text())
    validate_manifest(manifest, root)
    return manifest


def load_sample(root: str | Path, entry: dict) -> GestureSample:
    root = Path(root)
    rate = entry.get("rate_hz")
    channels = {k: signal_from_csv(root / entry["files"][k], rate) for k in CHANNEL_KINDS}
    return GestureSample(
        label=int(entry["label"]),
        provenance=entry["provenance"],
        channels=channels,
        params=AugmentationParams(**entry["params"]),
        duration_s=float(entry["duration_s"]),
        sample_id=entry["sample_id"],
    )


# -- feature store -------------------------------------------------------------

def build_feature_store(dataset_root: str | Path, out: str | Path, spec: FilterSpec = FilterSpec(),
                        channels=CHANNEL_KINDS) -> dict:
    """Preprocess every manifest entry for every channel.

    A sample that fails to load or preprocess is excluded (from all
    channels, so row order stays aligned) and listed with its reason in
    ``index.json["excluded"]``.
    """
    dataset_root, out = Path(dataset_root), Path(out)
    manifest = load_manifest(dataset_root)
    pres = {k: GesturePreprocessor(k, spec.cutoff_hz, spec.order, spec.zero_phase).fit() for k in channels}
    rows, excluded, feats = [], [], {k: [] for k in channels}
    for e in manifest["entries"]:
        try:
            sample = load_sample(dataset_root, e)
            vecs = {k: pres[k].transform([sample])[0] for k in channels}
        except RobogestError as exc:
            log.warning("excluding %s: %s", e["sample_id"], exc)
            excluded.append({"sample_id": e["sample_id"], "reason": str(exc)})
            continue
        rows.append({"sample_id": e["sample_id"], "label": e["label"], "provenance": e["provenance"]})
        for k in channels:
            feats[k].append(vecs[k])
    out.mkdir(parents=True, exist_ok=True)
    for k in channels:
        np.save(out / f"{k}.npy", np.vstack(feats[k]) if feats[k] else np.empty((0, 300)))
    index = {
        "schema": FEATURES_SCHEMA,
        "version": FEATURES_VERSION,
        "manifest_sha256": file_sha256(dataset_root / "manifest.json"),
        "filter": asdict(spec),
        "channels": list(channels),
        "rows": rows,
        "excluded": excluded,
    }
    dump_json(index, out / "index.json")
    return index


def load_feature_store(root: str | Path, channel: str) -> tuple[FeatureSet, FeatureSet]:
    """``(robot_set, human_set)`` for one channel."""
    root = Path(root)
    path = root / "index.json"
    if not path.is_file():
        raise ValidationError(f"no index.json under {root}")
    index = json.loads(path.read_text())
    if index.get("schema") != FEATURES_SCHEMA or index.get("version") != FEATURES_VERSION:
        raise ValidationError(f"{root}: not a v{FEATURES_VERSION} feature store")
    if channel not in index["channels"]:
        raise ValidationError(f"channel {channel!r} not in store (has {index['channels']})")
    X = np.load(root / f"{channel}.npy")
    rows = index["rows"]
    if len(X) != len(rows):
        raise ValidationError(f"{channel}.npy has {len(X)} rows, index lists {len(rows)}")
    full = FeatureSet(X, [r["label"] for r in rows], [r["provenance"] for r in rows],
                      [r["sample_id"] for r in rows], channel)
    robot = [i for i, r in enumerate(rows) if r["provenance"] == "robot"]
    human = [i for i, r in enumerate(rows) if r["provenance"] == "human-like"]
    if not robot or not human:
        raise ValidationError("feature store must contain both robot and human-like rows")
    return full.subset(robot), full.subset(human)


# -- checkpoint ----------------------------------------------------------------

def save_checkpoint(path: str | Path, model: MlpModel, scaler: Standardizer, channel: str) -> None:
    d = {"schema": CHECKPOINT_SCHEMA, "version": CHECKPOINT_VERSION, "channel": channel,
         **model.to_dict(),
         "normalization": {"mean": scaler.mean.tolist(), "scale": scaler.scale.tolist()}}
    dump_json(d, path)


def load_checkpoint(path: str | Path) -> tuple[MlpModel, Standardizer, str]:
    d = json.loads(Path(path).read_text())
    if d.get("schema") != CHECKPOINT_SCHEMA or d.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"{path}: not a v{CHECKPOINT_VERSION} checkpoint")
    model = MlpModel.from_dict(d)
    if model.layer_sizes != d["layer_sizes"]:
        raise ValidationError(f"{path}: layer sizes do not match parameters")
    norm = d["normalization"]
    return model, Standardizer(np.array(norm["mean"]), np.array(norm["scale"])), d["channel"]
