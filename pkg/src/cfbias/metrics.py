"""Outcome, effect and decision metrics."""

from __future__ import annotations

import numpy as np


def _rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def pehe(tau_hat, tau) -> float:
    """Root mean squared error of predicted vs true individual effects."""
    tau_hat = np.asarray(tau_hat, dtype=float).ravel()
    tau = np.asarray(tau, dtype=float).ravel()
    if len(tau_hat) != len(tau) or len(tau) == 0:
        raise ValueError("tau_hat and tau must be non-empty and of equal length")
    return _rmse(tau_hat, tau)


def precision_assignment(A_chosen, Y0, Y1) -> float:
    """Fraction of units whose chosen arm has the (weakly) larger outcome."""
    A = np.asarray(A_chosen).ravel()
    Y0 = np.asarray(Y0, dtype=float).ravel()
    Y1 = np.asarray(Y1, dtype=float).ravel()
    if not len(A) == len(Y0) == len(Y1):
        raise ValueError("length mismatch")
    chosen = np.where(A == 1, Y1, Y0)
    other = np.where(A == 1, Y0, Y1)
    return float(np.mean(chosen >= other))


def has(model, capability: str) -> bool:
    return capability in getattr(model, "capabilities", ())


def outcome_rmses(model, X, A, Y0, Y1) -> dict[str, float | None]:
    """Factual, counterfactual and per-arm counterfactual RMSE.

    ``rmse_y0_cf`` scores Y0 predictions on units that received arm 1 (Y0 is
    their counterfactual); ``rmse_y1_cf`` is the mirror image. Models without
    potential-outcome predictions get ``None`` everywhere.
    """
    keys = ("rmse_f", "rmse_cf", "rmse_y0_cf", "rmse_y1_cf")
    if not has(model, "outcomes"):
        return dict.fromkeys(keys)
    A = np.asarray(A).ravel()
    mu0 = model.predict_mu0(X)
    mu1 = model.predict_mu1(X)
    treated = A == 1
    f_pred = np.where(treated, mu1, mu0)
    cf_pred = np.where(treated, mu0, mu1)
    f_true = np.where(treated, Y1, Y0)
    cf_true = np.where(treated, Y0, Y1)
    out = {"rmse_f": _rmse(f_pred, f_true), "rmse_cf": _rmse(cf_pred, cf_true)}
    out["rmse_y0_cf"] = _rmse(mu0[treated], Y0[treated]) if treated.any() else None
    out["rmse_y1_cf"] = _rmse(mu1[~treated], Y1[~treated]) if (~treated).any() else None
    return out


def rmse_factual(obs, model, X=None) -> float | None:
    X = obs.base.X if X is None else X
    return outcome_rmses(model, X, obs.A, obs.base.Y0, obs.base.Y1)["rmse_f"]


def rmse_counterfactual(obs, model, X=None) -> float | None:
    X = obs.base.X if X is None else X
    return outcome_rmses(model, X, obs.A, obs.base.Y0, obs.base.Y1)["rmse_cf"]


def model_policy(model, X) -> np.ndarray:
    """Treat iff the predicted effect is strictly positive.

    Propensity-only models treat iff the predicted propensity is >= 0.5.
    """
    if has(model, "cate"):
        return (model.predict_cate(X) > 0).astype(np.int64)
    if has(model, "propensity"):
        return (model.predict_propensity(X) >= 0.5).astype(np.int64)
    raise ValueError("model exposes neither effect nor propensity predictions")
