"""Shapley feature attributions and biomarker-identification scores."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Callable

import numpy as np

from .dgp import FeaturePartition
from .learners.base import CATE, OUTCOMES, PROPENSITY
from .numerics import rng, sigmoid

DEFAULT_BUDGET = 64
DEFAULT_MAX_UNITS = 200


class DegenerateAttributionError(ValueError):
    """Every unit has zero total attribution mass."""


def linear_shapley(weights, intercept, X, background_mean) -> np.ndarray:
    """Exact Shapley values of an affine model: ``w_j * (x_j - mean_j)``.

    ``intercept`` does not enter the attributions; it only fixes the base
    value ``f(background_mean)`` that the rows sum up from.
    """
    w = np.asarray(weights, dtype=float).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.asarray(background_mean, dtype=float).ravel()
    if X.shape[1] != len(w) or len(mu) != len(w):
        raise ValueError("weights, background mean and X disagree on the number of features")
    return (X - mu) * w


def sampled_shapley(f: Callable[[np.ndarray], np.ndarray], x, background, budget: int = DEFAULT_BUDGET,
                    seed: int = 0, _path: tuple[int, ...] = ()) -> np.ndarray:
    """Permutation-sampling Shapley estimate for one unit.

    For each of ``budget`` random feature orderings, one background row is
    taken and features are switched from the background value to ``x`` one at
    a time; each feature is credited with the change in ``f``. ``f`` maps an
    ``(m, d)`` matrix to ``m`` outputs.

    Background rows are visited in shuffled full passes rather than drawn
    independently, so every row is used equally often (up to one pass).
    """
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if background.shape[0] == 0:
        raise ValueError("background must be non-empty")
    d = len(x)
    g = rng(seed, 30, *_path)
    perms = np.argsort(g.random((budget, d)), axis=1)
    nb = background.shape[0]
    passes = [g.permutation(nb) for _ in range(-(-budget // nb))]
    rows = background[np.concatenate(passes)[:budget]]
    Z = np.repeat(rows[:, None, :], d + 1, axis=1)  # (budget, d+1, d)
    # step k has the first k features of the permutation switched to x
    switched = np.zeros((budget, d + 1, d), dtype=bool)
    steps = np.arange(d + 1)[None, :, None]
    position = np.argsort(perms, axis=1)[:, None, :]  # where feature j sits in the order
    switched[:] = position < steps
    Z = np.where(switched, x[None, None, :], Z)
    vals = np.asarray(f(Z.reshape(-1, d)), dtype=float).reshape(budget, d + 1)
    deltas = np.diff(vals, axis=1)  # contribution of perms[:, k]
    phi = np.zeros(d)
    np.add.at(phi, perms.ravel(), deltas.ravel())
    return phi / budget


def sampled_shapley_matrix(f, X, background, budget: int = DEFAULT_BUDGET, seed: int = 0) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.vstack([sampled_shapley(f, x, background, budget, seed, (i,))
                      for i, x in enumerate(X)])


def attr_score(attr, index_set) -> float:
    """Mean share of absolute attribution mass falling on ``index_set``.

    Units with zero total mass are skipped; if all are, raises
    :class:`DegenerateAttributionError`.
    """
    idx = sorted(set(int(i) for i in index_set))
    if not idx:
        raise ValueError("index set is empty")
    a = np.abs(np.atleast_2d(np.asarray(attr, dtype=float)))
    if idx[0] < 0 or idx[-1] >= a.shape[1]:
        raise IndexError("index set refers to columns outside the attribution matrix")
    total = a.sum(axis=1)
    keep = total > 0
    if not keep.any():
        raise DegenerateAttributionError("all attribution rows are zero")
    share = a[keep][:, idx].sum(axis=1) / total[keep]
    return float(np.clip(share.mean(), 0.0, 1.0))


def _target_fn(model, target: str):
    if target == "cate":
        return model.predict_cate
    if target == "mu0":
        return model.predict_mu0
    return model.predict_propensity


def attribute(model, target: str, X, background, budget: int = DEFAULT_BUDGET,
              seed: int = 0) -> np.ndarray:
    """Attribution matrix for one prediction target of a fitted model."""
    background = np.atleast_2d(np.asarray(background, dtype=float))
    lin = model.linear_form(target)
    if lin is not None:
        w, b = lin
        if target == "propensity":
            # logistic link: attribute on the probability scale by sampling
            return sampled_shapley_matrix(lambda Z: sigmoid(Z @ w + b), X, background, budget, seed)
        return linear_shapley(w, b, X, background.mean(axis=0))
    return sampled_shapley_matrix(_target_fn(model, target), X, background, budget, seed)


def biomarker_targets(model) -> tuple[str | None, str | None]:
    caps = model.capabilities
    pred = "cate" if CATE in caps else ("propensity" if PROPENSITY in caps else None)
    prog = "mu0" if OUTCOMES in caps else ("propensity" if CATE not in caps and PROPENSITY in caps else None)
    return pred, prog


def biomarker_scores(model, X_test, partition: FeaturePartition, background,
                     budget: int = DEFAULT_BUDGET, seed: int = 0,
                     max_units: int = DEFAULT_MAX_UNITS, return_attributions: bool = False):
    """``(attr_pred, attr_prog)``; an entry is None when it cannot be scored."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))[:max_units]
    pred_t, prog_t = biomarker_targets(model)
    cache: dict[str, np.ndarray] = {}

    def score(target, index_set):
        if target is None or not index_set:
            return None
        if target not in cache:
            cache[target] = attribute(model, target, X_test, background, budget, seed)
        try:
            return attr_score(cache[target], index_set)
        except DegenerateAttributionError:
            return None

    result = (score(pred_t, partition.predictive), score(prog_t, partition.prognostic))
    if return_attributions:
        if pred_t is not None and pred_t not in cache:
            cache[pred_t] = attribute(model, pred_t, X_test, background, budget, seed)
        return result, cache.get(pred_t)
    return result


def biomarker_ranking(attr, feature_names, partition: FeaturePartition) -> list[dict]:
    mean_abs = np.abs(np.atleast_2d(attr)).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    pred, prog = set(partition.predictive), set(partition.prognostic)
    return [
        {
            "rank": r + 1,
            "feature_name": feature_names[j],
            "mean_abs_attribution": float(mean_abs[j]),
            "in_pred_set": int(j in pred),
            "in_prog_set": int(j in prog),
        }
        for r, j in enumerate(order)
    ]


def write_biomarker_ranking(path, ranking: list[dict]) -> None:
    fields = ["rank", "feature_name", "mean_abs_attribution", "in_pred_set", "in_prog_set"]
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in ranking:
            w.writerow({**row, "mean_abs_attribution": repr(row["mean_abs_attribution"])})
