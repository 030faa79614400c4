"""Experiment configuration: one YAML file fully determines a run."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .encoders import ModelConfig, TrainConfig

__all__ = ["DataConfig", "FusionConfig", "EvalConfig", "ExperimentConfig", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    path: str = ""
    smiles_col: str = "smiles"
    target_col: str = "target"
    id_col: str | None = None
    name: str | None = None
    # optional file with one test-set record id per line (fixed external split)
    test_index_file: str | None = None


@dataclass
class FusionConfig:
    methods: list[str] = field(default_factory=lambda: ["lasso", "elastic", "rf", "gb", "sgd"])
    include_mean_reference: bool = True
    lasso_lambda: float | str = 0.01  # or "auto" for the small tuning-split grid
    elastic_lambda: float | str = 0.01
    elastic_alpha: float = 0.5
    rf_trees: int = 100
    rf_max_depth: int = 6
    gb_rounds: int = 200
    gb_shrinkage: float = 0.05
    gb_max_depth: int = 3
    sgd_lr: float = 1e-2
    sgd_epochs: int = 2000
    sgd_batch: int = 16


@dataclass
class EvalConfig:
    noise_ratios: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.5])
    noise_repeats: int = 3
    knn: bool = True
    knn_k: int = 5


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    n_repeats: int = 15
    base_seed: int = 0
    kfold_k: int = 5
    train_noise_ratio: float = 0.0  # optional train-time noise exploration
    outdir: str = "runs"
    run_name: str | None = None  # default: wall-clock timestamp
    cache_dir: str = "cache"
    workers: int = 1
    deterministic: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw or {})
        sections = {
            "data": DataConfig,
            "model": ModelConfig,
            "train": TrainConfig,
            "fusion": FusionConfig,
            "eval": EvalConfig,
        }
        kwargs = {}
        for key, sub_cls in sections.items():
            sub_raw = raw.pop(key, {}) or {}
            _check_fields(sub_cls, sub_raw, key)
            kwargs[key] = sub_cls(**sub_raw)
        _check_fields(cls, raw, "top level", skip=set(sections))
        return cls(**kwargs, **raw)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(raw)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False),
            encoding="utf-8",
        )


def _check_fields(cls, raw: dict, where: str, skip: set | None = None) -> None:
    known = {f.name for f in dataclasses.fields(cls)} - (skip or set())
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {sorted(unknown)}")
