"""Experiment configuration (a single versioned JSON document)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dgp import (TOY_KINDS, PotentialDataset, gen_toy, random_linear_spec,
                   simulate_linear_outcomes, synthetic_covariates)
from ..ingest import build_empirical_dataset, load_csv, load_dataset
from ..learners import is_valid_learner
from ..policy import DEFAULT_BETA_GRID, SOURCES

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class AttributionConfig:
    enabled: bool = False
    budget: int = 64
    max_units: int = 200


@dataclass
class ExperimentConfig:
    """What to sweep.

    ``dataset`` is a dict whose ``kind`` is one of ``toy1..toy4``,
    ``linear-synthetic``, ``empirical`` (raw covariate/response CSVs) or
    ``bundle`` (a directory written by ``save_dataset``).
    """

    dataset: dict
    policy_sources: list[str]
    learners: list[str]
    beta_grid: list[float] = field(default_factory=lambda: list(DEFAULT_BETA_GRID))
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    folds: int = 5
    n: int | None = None
    m: int = 20
    attribution: AttributionConfig = field(default_factory=AttributionConfig)
    net: dict = field(default_factory=dict)
    output_dir: str | None = None
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if isinstance(self.attribution, dict):
            self.attribution = AttributionConfig(**self.attribution)
        self.beta_grid = [float(b) for b in self.beta_grid]
        self.seeds = [int(s) for s in self.seeds]
        self.validate()

    def validate(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {self.schema!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        for name, grid in (("policy_sources", self.policy_sources), ("beta_grid", self.beta_grid),
                           ("seeds", self.seeds), ("learners", self.learners)):
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
        for src in self.policy_sources:
            if src not in SOURCES:
                raise ConfigError(f"unknown policy source {src!r}")
        if any(b < 0 for b in self.beta_grid):
            raise ConfigError("beta values must be non-negative")
        if len(set(self.beta_grid)) != len(self.beta_grid):
            raise ConfigError("beta grid contains duplicates")
        if len(set(self.seeds)) != len(self.seeds) or min(self.seeds) < 0:
            raise ConfigError("seeds must be distinct non-negative integers")
        for name in self.learners:
            if not is_valid_learner(name):
                raise ConfigError(f"unknown learner {name!r}")
        if "kind" not in self.dataset:
            raise ConfigError("dataset.kind is required")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "schema" not in d:
            raise ConfigError('config must declare "schema": 1')
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def build_dataset(cfg: ExperimentConfig, base_dir: Path | None = None) -> PotentialDataset:
    ds = dict(cfg.dataset)
    kind = ds["kind"]
    n = int(ds.get("n", cfg.n or 0)) or None
    seed = int(ds.get("seed", 0))

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() or base_dir is None else base_dir / p

    if kind in TOY_KINDS:
        return gen_toy(kind, n or 4000, seed, float(ds.get("noise_sd", 0.0)))
    if kind == "linear-synthetic":
        n = n or 1000
        names = ()
        if ds.get("covariates"):
            table = load_csv(resolve(ds["covariates"]))
            X = table.values[:n]
            sd = X.std(axis=0)
            X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
            names = table.col_names
        else:
            X = synthetic_covariates(n, int(ds.get("d", 100)), seed)
        spec = random_linear_spec(X.shape[1], int(ds.get("n_prog", 20)), int(ds.get("n_pred", 20)),
                                  seed, ds.get("noise_sd"))
        return simulate_linear_outcomes(X, spec, names, name="linear-synthetic")
    if kind == "empirical":
        for key in ("cov", "resp", "arm0", "arm1"):
            if key not in ds:
                raise ConfigError(f"empirical dataset needs {key!r}")
        return build_empirical_dataset(
            load_csv(resolve(ds["cov"])), load_csv(resolve(ds["resp"])), ds["arm0"], ds["arm1"],
            int(ds.get("k", 200)), bool(ds.get("standardize_arms", False)),
            name=ds.get("name", "empirical"))
    if kind == "bundle":
        return load_dataset(resolve(ds["path"]))
    raise ConfigError(f"unknown dataset kind {kind!r}")
