"""Potential-outcome dataset generators.

Two families live here: the four two-dimensional toy problems with logistic
outcome surfaces, and a linear outcome simulator for real or synthetic
covariates where arm 0 is a true control (only the predictive features carry
the treatment effect).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import rng

TOY_KINDS = ("toy1", "toy2", "toy3", "toy4")


@dataclass(frozen=True)
class FeaturePartition:
    prognostic: tuple[int, ...] = ()
    predictive: tuple[int, ...] = ()
    control: tuple[int, ...] = ()

    def __post_init__(self):
        sets = [set(self.prognostic), set(self.predictive), set(self.control)]
        for i in range(3):
            for j in range(i + 1, 3):
                if sets[i] & sets[j]:
                    raise ValueError("feature partition sets must be disjoint")

    @property
    def empty(self) -> bool:
        return not (self.prognostic or self.predictive)

    def validate(self, n_features: int) -> None:
        for idx in self.prognostic + self.predictive + self.control:
            if not 0 <= idx < n_features:
                raise IndexError(f"feature index {idx} out of range for d={n_features}")

    def to_dict(self) -> dict:
        return {
            "prognostic": list(self.prognostic),
            "predictive": list(self.predictive),
            "control": list(self.control),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturePartition":
        return cls(
            tuple(int(i) for i in d.get("prognostic", ())),
            tuple(int(i) for i in d.get("predictive", ())),
            tuple(int(i) for i in d.get("control", ())),
        )


@dataclass
class PotentialDataset:
    """Covariates with both potential outcomes observed."""

    X: np.ndarray
    Y0: np.ndarray
    Y1: np.ndarray
    partition: FeaturePartition = field(default_factory=FeaturePartition)
    feature_names: tuple[str, ...] = ()
    unit_ids: tuple[str, ...] = ()
    name: str = "dataset"
    toy_kind: str | None = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.Y0 = np.asarray(self.Y0, dtype=float).ravel()
        self.Y1 = np.asarray(self.Y1, dtype=float).ravel()
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        n, d = self.X.shape
        if len(self.Y0) != n or len(self.Y1) != n:
            raise ValueError("outcome vectors must have one entry per row of X")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y0))
                and np.all(np.isfinite(self.Y1))):
            raise ValueError("dataset contains non-finite values")
        if not self.feature_names:
            self.feature_names = tuple(f"x{j}" for j in range(d))
        if not self.unit_ids:
            self.unit_ids = tuple(str(i) for i in range(n))
        self.feature_names = tuple(self.feature_names)
        self.unit_ids = tuple(self.unit_ids)
        if len(self.feature_names) != d or len(self.unit_ids) != n:
            raise ValueError("feature_names/unit_ids have the wrong length")
        self.partition.validate(d)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def f_nl(x):
    """Steep logistic squashing centred at 0.5."""
    return 1.0 / (1.0 + np.exp(-10.0 * (np.asarray(x, dtype=float) - 0.5)))


def toy_outcomes(kind: str, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x0, x1 = X[:, 0], X[:, 1]
    if kind in ("toy1", "toy2"):
        return f_nl(x0), f_nl(1.0 - x0)
    if kind == "toy3":
        return f_nl(x0), f_nl(1.0 - x1)
    if kind == "toy4":
        return f_nl(x0), f_nl(x1)
    raise ValueError(f"unknown toy kind {kind!r}; expected one of {TOY_KINDS}")


def toy_canonical_score(kind: str, X: np.ndarray) -> np.ndarray:
    """Raw (unstandardized) assignment score each toy problem is built around.

    toy2 depends on x1 instead of x0 so that assignment is independent of the
    outcome mechanism.
    """
    x0, x1 = X[:, 0], X[:, 1]
    if kind == "toy1":
        return 1.0 - x0
    if kind == "toy2":
        return 1.0 - x1
    if kind == "toy3":
        return 1.0 - x0 - x1
    if kind == "toy4":
        return x0.copy()
    raise ValueError(f"unknown toy kind {kind!r}; expected one of {TOY_KINDS}")


def gen_toy(kind: str, n: int, seed: int, noise_sd: float = 0.0) -> PotentialDataset:
    if kind not in TOY_KINDS:
        raise ValueError(f"unknown toy kind {kind!r}; expected one of {TOY_KINDS}")
    if n < 2:
        raise ValueError("n must be at least 2")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    g = rng(seed, 0)
    X = g.uniform(0.0, 1.0, size=(n, 2))
    Y0, Y1 = toy_outcomes(kind, X)
    if noise_sd > 0:
        Y0 = Y0 + g.normal(0.0, noise_sd, n)
        Y1 = Y1 + g.normal(0.0, noise_sd, n)
    partition = {
        "toy1": FeaturePartition(prognostic=(0,), predictive=()),
        "toy2": FeaturePartition(prognostic=(0,), control=(1,)),
        "toy3": FeaturePartition(prognostic=(0,), predictive=(1,)),
        "toy4": FeaturePartition(prognostic=(0,), predictive=(1,)),
    }[kind]
    return PotentialDataset(X, Y0, Y1, partition, ("x0", "x1"), name=kind, toy_kind=kind)


@dataclass(frozen=True)
class LinearOutcomeSpec:
    partition: FeaturePartition
    w_prog: tuple[float, ...]
    w_pred: tuple[float, ...]
    noise_sd: float | None = None  # None -> 0.1 * std of the noiseless signal
    seed: int = 0

    def __post_init__(self):
        if len(self.w_prog) != len(self.partition.prognostic):
            raise ValueError("w_prog length must match the prognostic index set")
        if len(self.w_pred) != len(self.partition.predictive):
            raise ValueError("w_pred length must match the predictive index set")
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "w_prog": list(self.w_prog),
            "w_pred": list(self.w_pred),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }


def random_linear_spec(d: int, n_prog: int = 20, n_pred: int = 20, seed: int = 0,
                       noise_sd: float | None = None) -> LinearOutcomeSpec:
    if n_prog < 0 or n_pred < 0 or n_prog + n_pred > d:
        raise ValueError(f"cannot draw {n_prog}+{n_pred} disjoint features from d={d}")
    g = rng(seed, 1)
    idx = g.permutation(d)[: n_prog + n_pred]
    prog = tuple(sorted(int(i) for i in idx[:n_prog]))
    pred = tuple(sorted(int(i) for i in idx[n_prog:]))
    rest = tuple(sorted(set(range(d)) - set(prog) - set(pred)))
    w_prog = tuple(float(w) for w in g.uniform(0.0, 1.0, n_prog))
    w_pred = tuple(float(w) for w in g.uniform(0.0, 1.0, n_pred))
    return LinearOutcomeSpec(FeaturePartition(prog, pred, rest), w_prog, w_pred,
                             noise_sd, seed)


def simulate_linear_outcomes(X, spec: LinearOutcomeSpec, feature_names=(), unit_ids=(),
                             name: str = "linear-synthetic") -> PotentialDataset:
    """Y0 = X_prog w_prog + e0 and Y1 = Y0 + X_pred w_pred + e1."""
    X = np.asarray(X, dtype=float)
    spec.partition.validate(X.shape[1])
    prog = list(spec.partition.prognostic)
    pred = list(spec.partition.predictive)
    base = X[:, prog] @ np.asarray(spec.w_prog, dtype=float) if prog else np.zeros(len(X))
    effect = X[:, pred] @ np.asarray(spec.w_pred, dtype=float) if pred else np.zeros(len(X))
    noise_sd = spec.noise_sd
    if noise_sd is None:
        noise_sd = 0.1 * float(np.std(np.concatenate([base, base + effect])))
    g = rng(spec.seed, 2)
    e0 = g.normal(0.0, 1.0, len(X)) * noise_sd
    e1 = g.normal(0.0, 1.0, len(X)) * noise_sd
    Y0 = base + e0
    Y1 = Y0 + effect + e1
    return PotentialDataset(X, Y0, Y1, spec.partition, tuple(feature_names), tuple(unit_ids),
                            name=name)


def synthetic_covariates(n: int, d: int, seed: int) -> np.ndarray:
    """Standard-normal covariates, standardized column-wise on the sample."""
    X = rng(seed, 3).normal(size=(n, d))
    return (X - X.mean(axis=0)) / X.std(axis=0)


def true_cate(ds: PotentialDataset) -> np.ndarray:
    return ds.Y1 - ds.Y0
