"""Shared numeric primitives: seeded substreams, sigmoid, entropy and binning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DegenerateInputError(ValueError):
    """Raised when an input has no variation where variation is required."""


@dataclass(frozen=True)
class RngStream:
    """A reproducible random substream addressed by ``(master_seed, path)``.

    Streams are backed by the counter-based Philox generator, keyed through
    :class:`numpy.random.SeedSequence` with ``path`` as the spawn key. Two
    streams with equal keys yield identical draws; different paths share no
    state, so the order in which substreams are consumed never matters.
    """

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.master_seed < 0 or any(p < 0 for p in self.path):
            raise ValueError("seed and path entries must be non-negative")

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


def rng(seed: int, *path: int) -> np.random.Generator:
    return RngStream(int(seed), tuple(int(p) for p in path)).generator()


def sigmoid(x):
    """Logistic function ``e^x / (1 + e^x)``; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def binary_entropy(p):
    """Entropy in bits of a Bernoulli(p) variable, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(~np.isfinite(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    h = -_xlog2x(p) - _xlog2x(1.0 - p)
    return h if h.ndim else float(h)


def entropy_from_counts(counts) -> float:
    """Plug-in entropy (bits) of the empirical distribution given by counts."""
    counts = np.asarray(counts, dtype=float).ravel()
    total = counts.sum()
    if total <= 0:
        return 0.0
    return float(-_xlog2x(counts / total).sum())


def standardize(v) -> np.ndarray:
    """Center to mean 0 and scale to population standard deviation 1."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("standardize needs a vector of length >= 2")
    sd = v.std()
    if not np.isfinite(sd) or sd <= 1e-12 * max(1.0, float(np.abs(v).max())):
        raise DegenerateInputError("cannot standardize a constant vector")
    return (v - v.mean()) / sd


@dataclass(frozen=True)
class BinEdges:
    edges: np.ndarray

    @property
    def k(self) -> int:
        return len(self.edges) - 1

    def digitize(self, v) -> np.ndarray:
        """Bin index per value; intervals are right-open except the last one."""
        v = np.asarray(v, dtype=float)
        if self.k == 1:
            return np.zeros(v.shape, dtype=np.int64)
        idx = np.searchsorted(self.edges, v, side="right") - 1
        return np.clip(idx, 0, self.k - 1)


MAX_AUTO_BINS = 64


def auto_bin_count(v) -> int:
    """max(Sturges, Freedman-Diaconis) clamped to [2, 64]; 1 for constant input."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if n < 2:
        raise ValueError("auto_bins needs at least two values")
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return 1
    sturges = int(math.ceil(math.log2(n) + 1.0))
    q75, q25 = np.percentile(v, [75, 25])
    iqr = float(q75 - q25)
    fd = 0
    if iqr > 0:
        width = 2.0 * iqr * n ** (-1.0 / 3.0)
        fd = int(math.ceil((hi - lo) / width))
    return min(max(sturges, fd, 2), MAX_AUTO_BINS)


def auto_bins(v, max_bins: int = MAX_AUTO_BINS) -> BinEdges:
    v = np.asarray(v, dtype=float)
    k = auto_bin_count(v)
    lo, hi = float(v.min()), float(v.max())
    if k == 1:
        return BinEdges(np.array([lo, lo + 1.0]))
    k = min(k, max_bins)
    return BinEdges(np.linspace(lo, hi, k + 1))
