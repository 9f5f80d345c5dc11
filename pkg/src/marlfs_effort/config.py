"""Run configuration: one YAML (or JSON) document, every field optional.

Schema (defaults shown)::

    input: data/SEERA.csv
    delimiter: ","
    sentinels: ["?", "Not exist"]
    col_drop_ratio: 0.10        # drop columns with missing fraction >= this
    row_drop_ratio: 0.10        # then drop rows with missing fraction > this
    label: Actual duration
    expert_column: Estimated duration
    exclude: [Estimated cost, Actual cost]
    imputation:
      strategies: {Team contracts: mode, ...}   # SEERA table by default
      fallback: median          # for unlisted columns; null makes them an error
    split: {train_fraction: 0.8, seed: 0}
    spearman_top_k: 10
    forest: {n_trees: 100, max_depth: null, min_samples_split: 2,
             max_features: null, bootstrap: true, seed: 0}
    reward: {alpha: 1.0, beta: 0.3, k_decay: 0.01, scale: 100.0}
    marlfs: {episodes: 100, steps_per_episode: 30, epsilon: 0.9,
             epsilon_is_greedy: true, gamma: 0.9, batch_size: 32,
             learning_rate: 0.01, target_sync_every: 100,
             buffer_capacity: 2000, hidden: [64, 8], cv_folds: 5,
             cv_seed: null, seed: 0}
    baselines: {filter_threshold: 1.0, rfe_k: [10, 20, 30], rfe_step: 1}
    methods: [MARLFS, Expert, raw-RF, Filter, Wrapper-10, Wrapper-20, Wrapper-30]
    curves: {x_max: 10.0, step: 0.01, k: 1.0}
    output_dir: out
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .dataset import DEFAULT_SENTINELS, SEERA_IMPUTATION, ImputationPlan
from .forest import ForestParams
from .marlfs import MarlfsConfig
from .reward import RewardParams

METHODS = ("MARLFS", "Expert", "raw-RF", "Filter", "Wrapper-10", "Wrapper-20", "Wrapper-30")

DEFAULTS: dict[str, Any] = {
    "input": "data/SEERA.csv",
    "delimiter": ",",
    "sentinels": list(DEFAULT_SENTINELS),
    "col_drop_ratio": 0.10,
    "row_drop_ratio": 0.10,
    "label": "Actual duration",
    "expert_column": "Estimated duration",
    "exclude": ["Estimated cost", "Actual cost"],
    "imputation": {"strategies": dict(SEERA_IMPUTATION), "fallback": "median"},
    "split": {"train_fraction": 0.8, "seed": 0},
    "spearman_top_k": 10,
    "forest": {"n_trees": 100, "max_depth": None, "min_samples_split": 2,
               "max_features": None, "bootstrap": True, "seed": 0},
    "reward": {"alpha": 1.0, "beta": 0.3, "k_decay": 0.01, "scale": 100.0},
    "marlfs": {"episodes": 100, "steps_per_episode": 30, "epsilon": 0.9,
               "epsilon_is_greedy": True, "gamma": 0.9, "batch_size": 32,
               "learning_rate": 0.01, "target_sync_every": 100,
               "buffer_capacity": 2000, "hidden": [64, 8], "cv_folds": 5,
               "cv_seed": None, "seed": 0},
    "baselines": {"filter_threshold": 1.0, "rfe_k": [10, 20, 30], "rfe_step": 1},
    "methods": list(METHODS),
    "curves": {"x_max": 10.0, "step": 0.01, "k": 1.0},
    "output_dir": "out",
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        # imputation strategies replace wholesale rather than merge
        if isinstance(base[key], dict) and key != "strategies":
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def from_dict(cls, data: Optional[dict] = None, base_dir=".") -> "RunConfig":
        merged = _merge(DEFAULTS, data or {})
        cfg = cls(merged, Path(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(data, base_dir=path.parent)

    def validate(self) -> None:
        for m in self.raw["methods"]:
            if m not in self.method_names(all_=True):
                raise ConfigError(f"unknown method {m!r}")
        self.forest_params()
        self.reward_params()
        self.marlfs_config()
        self.imputation_plan()
        if not 0 < self.raw["split"]["train_fraction"] < 1:
            raise ConfigError("split.train_fraction must lie in (0, 1)")

    def method_names(self, all_: bool = False) -> list[str]:
        wrappers = [f"Wrapper-{k}" for k in self.raw["baselines"]["rfe_k"]]
        known = ["MARLFS", "Expert", "raw-RF", "Filter", *wrappers]
        if all_:
            return known
        return [m for m in known if m in self.raw["methods"]]

    def with_seed(self, seed: int) -> "RunConfig":
        """Override every named seed with ``seed``."""
        raw = copy.deepcopy(self.raw)
        raw["split"]["seed"] = seed
        raw["forest"]["seed"] = seed
        raw["marlfs"]["seed"] = seed
        return RunConfig(raw, self.base_dir)

    def with_methods(self, methods: list[str]) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["methods"] = list(methods)
        cfg = RunConfig(raw, self.base_dir)
        cfg.validate()
        return cfg

    @property
    def input_path(self) -> Path:
        p = Path(self.raw["input"])
        return p if p.is_absolute() else self.base_dir / p

    def forest_params(self) -> ForestParams:
        return ForestParams(**self.raw["forest"])

    def reward_params(self) -> RewardParams:
        return RewardParams(**self.raw["reward"])

    def marlfs_config(self) -> MarlfsConfig:
        m = dict(self.raw["marlfs"])
        m["hidden"] = tuple(m["hidden"])
        return MarlfsConfig(reward=self.reward_params(), forest=self.forest_params(), **m)

    def imputation_plan(self) -> ImputationPlan:
        imp = self.raw["imputation"]
        return ImputationPlan(imp["strategies"], imp["fallback"])

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()
