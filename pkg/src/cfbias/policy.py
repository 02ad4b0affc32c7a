"""Observational treatment-assignment policies with a tunable bias scale.

A policy turns a standardized score ``z`` into propensities
``pi = sigmoid(beta * z)`` and samples binary assignments from them.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .dgp import PotentialDataset, toy_canonical_score
from .numerics import rng, sigmoid, standardize

log = logging.getLogger(__name__)

SOURCES = ("Y0", "Y1", "Effect", "XRand", "XPred", "ToyCanonical")
DEFAULT_BETA_GRID = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class PolicySpec:
    source: str
    beta: float
    seed: int = 0
    m: int = 20

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown policy source {self.source!r}; expected one of {SOURCES}")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if self.source in ("XRand", "XPred") and self.m < 1:
            raise ValueError("m must be >= 1 for feature-based scores")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ObservationalDataset:
    base: PotentialDataset
    z: np.ndarray
    pi: np.ndarray
    A: np.ndarray
    Yf: np.ndarray
    Ycf: np.ndarray
    policy: PolicySpec

    @property
    def n(self) -> int:
        return self.base.n


def default_beta_grid() -> tuple[float, ...]:
    return DEFAULT_BETA_GRID


def raw_score(ds: PotentialDataset, spec: PolicySpec) -> np.ndarray:
    src = spec.source
    if src == "Y0":
        return ds.Y0.copy()
    if src == "Y1":
        return ds.Y1.copy()
    if src == "Effect":
        return ds.Y1 - ds.Y0
    if src == "ToyCanonical":
        if ds.toy_kind is None:
            raise ValueError("ToyCanonical policy needs a toy dataset")
        return toy_canonical_score(ds.toy_kind, ds.X)
    g = rng(spec.seed, 10, SOURCES.index(src))
    if src == "XRand":
        m = min(spec.m, ds.d)
        cols = g.choice(ds.d, size=m, replace=False)
        w = g.uniform(-1.0, 1.0, m)
    else:
        pred = np.asarray(ds.partition.predictive, dtype=int)
        if pred.size == 0:
            raise ValueError("XPred policy needs a non-empty predictive feature set")
        m = spec.m
        if m > pred.size:
            log.warning("XPred: m=%d exceeds %d predictive features; using all", m, pred.size)
            m = pred.size
        cols = g.choice(pred, size=m, replace=False)
        w = g.uniform(0.0, 1.0, m)
    return ds.X[:, cols] @ w


def build_score(ds: PotentialDataset, spec: PolicySpec) -> np.ndarray:
    """Standardized assignment score for the policy's source."""
    return standardize(raw_score(ds, spec))


def assign(ds: PotentialDataset, spec: PolicySpec) -> ObservationalDataset:
    z = build_score(ds, spec)
    pi = sigmoid(spec.beta * z)
    u = rng(spec.seed, 11).uniform(size=ds.n)
    A = (u < pi).astype(np.int64)
    Yf = np.where(A == 1, ds.Y1, ds.Y0)
    Ycf = np.where(A == 1, ds.Y0, ds.Y1)
    return ObservationalDataset(ds, z, pi, A, Yf, Ycf, spec)
