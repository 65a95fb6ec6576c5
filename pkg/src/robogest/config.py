"""Experiment configuration: one JSON document drives every CLI stage.

Schema (all keys optional, defaults shown by ``ExperimentConfig().to_dict()``)::

    {
      "seed": 0,
      "channel": "velocity",
      "generation": {digits, human_per_digit, robot_levels, ranges, plane_scale_m,
                     mount, joint_rate_hz, imu_rate_hz, gravity_mps2,
                     robot_noise_std, human_noise_std, human_jitter,
                     wrist_sway_deg, wrist_sway_band_hz},
      "filter": {cutoff_hz, order, zero_phase},
      "train": {iterations, max_epochs, patience_epochs, val_fraction,
                learning_rate, batch_size, hidden_width}
    }

The global ``seed`` overrides the generation and training seeds so one
number pins the whole run.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .datasets import GenerationConfig
from .errors import ValidationError
from .protocol import TrainConfig
from .signals import FilterSpec, channel_kind

CONFIG_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    channel: str = "velocity"
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    filter: FilterSpec = field(default_factory=FilterSpec)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "channel", channel_kind(self.channel))
        object.__setattr__(self, "generation", replace(self.generation, seed=int(self.seed)))
        object.__setattr__(self, "train", replace(self.train, seed=int(self.seed)))

    def to_dict(self) -> dict:
        gen = self.generation.to_dict()
        gen.pop("seed")
        tr = self.train.to_dict()
        tr.pop("seed")
        return {"version": CONFIG_VERSION, "seed": int(self.seed), "channel": self.channel,
                "generation": gen, "filter": asdict(self.filter), "train": tr}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {"version", "seed", "channel", "generation", "filter", "train"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if d.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ValidationError(f"unsupported config version {d['version']}")
        try:
            return cls(
                seed=d.get("seed", 0),
                channel=d.get("channel", "velocity"),
                generation=GenerationConfig.from_dict(d.get("generation", {})),
                filter=FilterSpec(**d.get("filter", {})),
                train=TrainConfig(**d.get("train", {})),
            )
        except TypeError as exc:
            raise ValidationError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc

    def with_overrides(self, *, seed=None, channel=None, iterations=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if channel is not None:
            cfg = replace(cfg, channel=channel)
        if iterations is not None:
            cfg = replace(cfg, train=replace(cfg.train, iterations=iterations))
        return cfg


def config_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()
