"""Information-theoretic treatment-assignment bias estimates.

Every bias is a normalized mutual information ``I(A; Z) / H(A)`` in bits.
Continuous variables are discretized with equal-width bins computed on the
pooled sample, and entropies use plug-in frequencies. The X-bias is computed
analytically from the true propensities instead of a high-dimensional MI
estimate: with ``A | X ~ Bernoulli(pi(X))``, ``H(A | X) = E[h(pi(X))]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .metrics import precision_assignment
from .numerics import BinEdges, auto_bins, binary_entropy, entropy_from_counts

JOINT_MAX_BINS = 16


class DegenerateAssignmentError(ValueError):
    """All units received the same arm, so H(A) = 0 and biases are undefined."""


def _as_binary(A) -> np.ndarray:
    A = np.asarray(A).ravel()
    if not np.all((A == 0) | (A == 1)):
        raise ValueError("assignments must be 0/1")
    return A.astype(np.int64)


def entropy_of_assignment(A) -> float:
    A = _as_binary(A)
    if A.size == 0:
        raise ValueError("empty assignment vector")
    return entropy_from_counts(np.bincount(A, minlength=2))


def _mi_discrete(A: np.ndarray, labels: np.ndarray) -> float:
    """Plug-in I(A; L) = H(L) - H(L | A) for integer labels."""
    _, lab = np.unique(labels, return_inverse=True)
    k = int(lab.max()) + 1
    table = np.zeros((2, k))
    np.add.at(table, (A, lab), 1.0)
    h_l = entropy_from_counts(table.sum(axis=0))
    n = table.sum()
    h_l_given_a = sum(table[a].sum() / n * entropy_from_counts(table[a]) for a in (0, 1))
    return max(h_l - h_l_given_a, 0.0)


def mutual_information_binned(A, z, edges: BinEdges | None = None,
                              max_bins: int | None = None) -> float:
    """Binned plug-in estimate of I(A; z) in bits, clamped at 0."""
    A = _as_binary(A)
    z = np.asarray(z, dtype=float).ravel()
    if len(A) != len(z):
        raise ValueError("A and z must have equal length")
    if len(z) < 2:
        raise ValueError("need at least two samples")
    if edges is None:
        edges = auto_bins(z) if max_bins is None else auto_bins(z, max_bins)
    if edges.k == 1:
        return 0.0
    return _mi_discrete(A, edges.digitize(z))


def _normalize(mi: float, h_a: float) -> float:
    if h_a <= 0:
        raise DegenerateAssignmentError("all units share one arm; H(A) = 0")
    return float(min(max(mi / h_a, 0.0), 1.0))


def z_bias(A, z, edges: BinEdges | None = None, max_bins: int | None = None) -> float:
    return _normalize(mutual_information_binned(A, z, edges, max_bins), entropy_of_assignment(A))


def joint_cells(Y0, Y1, max_bins: int = JOINT_MAX_BINS) -> tuple[np.ndarray, int, int]:
    e0 = auto_bins(Y0, max_bins)
    e1 = auto_bins(Y1, max_bins)
    return e0.digitize(Y0) * e1.k + e1.digitize(Y1), e0.k, e1.k


def joint_outcome_bias(A, Y0, Y1, max_bins: int = JOINT_MAX_BINS) -> float:
    A = _as_binary(A)
    h_a = entropy_of_assignment(A)
    cells, _, _ = joint_cells(np.asarray(Y0, float), np.asarray(Y1, float), max_bins)
    return _normalize(_mi_discrete(A, cells), h_a)


def x_bias_analytic(pi, A) -> float:
    """1 - E[h(pi)] / H(A), using the propensities that generated ``A``."""
    pi = np.asarray(pi, dtype=float).ravel()
    A = _as_binary(A)
    if len(pi) != len(A):
        raise ValueError("pi and A must have equal length")
    h_a = entropy_of_assignment(A)
    if h_a <= 0:
        raise DegenerateAssignmentError("all units share one arm; H(A) = 0")
    return float(min(max(1.0 - float(np.mean(binary_entropy(pi))) / h_a, 0.0), 1.0))


def interaction_information(A, Y0, Y1, max_bins: int = JOINT_MAX_BINS) -> float:
    """I(A; Y0; Y1-Y0) = I(A; Y0) - I(A; Y0 | Y1-Y0), binned. Sign is not constrained."""
    A = _as_binary(A)
    Y0 = np.asarray(Y0, float)
    eff = np.asarray(Y1, float) - Y0
    b0 = auto_bins(Y0, max_bins).digitize(Y0)
    be = auto_bins(eff, max_bins).digitize(eff)

    def h(*cols):
        _, inv = np.unique(np.column_stack(cols), axis=0, return_inverse=True)
        return entropy_from_counts(np.bincount(inv.ravel()))

    i_a_y0 = h(A) + h(b0) - h(A, b0)
    i_a_y0_given_e = h(A, be) + h(b0, be) - h(A, b0, be) - h(be)
    return float(i_a_y0 - i_a_y0_given_e)


@dataclass
class BiasReport:
    b_y0: float
    b_y1: float
    b_effect: float
    b_joint: float
    b_x: float
    h_a: float
    prec_ass_pi: float
    bins_y0: int
    bins_y1: int
    bins_effect: int
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def bias_report(obs) -> BiasReport:
    ds = obs.base
    A = _as_binary(obs.A)
    h_a = entropy_of_assignment(A)
    if h_a <= 0:
        raise DegenerateAssignmentError("all units share one arm; H(A) = 0")
    eff = ds.Y1 - ds.Y0
    e_y0, e_y1, e_eff = auto_bins(ds.Y0), auto_bins(ds.Y1), auto_bins(eff)
    return BiasReport(
        b_y0=z_bias(A, ds.Y0, e_y0),
        b_y1=z_bias(A, ds.Y1, e_y1),
        b_effect=z_bias(A, eff, e_eff),
        b_joint=joint_outcome_bias(A, ds.Y0, ds.Y1),
        b_x=x_bias_analytic(obs.pi, A),
        h_a=h_a,
        prec_ass_pi=precision_assignment(A, ds.Y0, ds.Y1),
        bins_y0=e_y0.k,
        bins_y1=e_y1.k,
        bins_effect=e_eff.k,
        n=ds.n,
    )
