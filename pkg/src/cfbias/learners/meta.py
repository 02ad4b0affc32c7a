"""S-, T- and X-learners over linear base regressors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import sigmoid
from .base import CATE, OUTCOMES, CateModel, check_two_arms
from .linear import LinearFit, fit_lasso, fit_logistic, fit_ridge

BASE_KINDS = ("ols", "ridge", "lasso")


@dataclass(frozen=True)
class BaseRegressorSpec:
    kind: str = "ridge"
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise ValueError(f"unknown base regressor {self.kind!r}; expected {BASE_KINDS}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def fit_base(X, y, base: BaseRegressorSpec) -> LinearFit:
    if base.kind == "ols":
        return fit_ridge(X, y, 0.0)
    if base.kind == "ridge":
        return fit_ridge(X, y, base.lam)
    return fit_lasso(X, y, base.lam)


class SLearner(CateModel):
    capabilities = frozenset({OUTCOMES, CATE})

    def __init__(self, fit: LinearFit):
        self.fit = fit

    def _predict(self, X, a: float) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.fit.coef[:-1] + a * self.fit.coef[-1] + self.fit.intercept

    def predict_mu0(self, X):
        return self._predict(X, 0.0)

    def predict_mu1(self, X):
        return self._predict(X, 1.0)

    def linear_form(self, target):
        w, b, ta = self.fit.coef[:-1], self.fit.intercept, self.fit.coef[-1]
        if target == "mu0":
            return w.copy(), b
        if target == "cate":
            return np.zeros_like(w), float(ta)
        return None


class TLearner(CateModel):
    capabilities = frozenset({OUTCOMES, CATE})

    def __init__(self, fit0: LinearFit, fit1: LinearFit):
        self.fit0, self.fit1 = fit0, fit1

    def predict_mu0(self, X):
        return self.fit0.predict(X)

    def predict_mu1(self, X):
        return self.fit1.predict(X)

    def linear_form(self, target):
        if target == "mu0":
            return self.fit0.coef.copy(), self.fit0.intercept
        if target == "cate":
            return self.fit1.coef - self.fit0.coef, self.fit1.intercept - self.fit0.intercept
        return None


class XLearner(CateModel):
    """Combines per-arm effect regressions with a propensity weight g(x):
    ``tau(x) = g(x) tau0(x) + (1 - g(x)) tau1(x)``. Effect predictions only."""

    capabilities = frozenset({CATE})

    def __init__(self, tau0: LinearFit, tau1: LinearFit, g: LinearFit | float):
        self.tau0, self.tau1, self.g = tau0, tau1, g

    def weight(self, X) -> np.ndarray:
        if isinstance(self.g, LinearFit):
            return sigmoid(self.g.predict(X))
        return np.full(np.asarray(X).shape[0], float(self.g))

    def predict_cate(self, X):
        g = self.weight(X)
        return g * self.tau0.predict(X) + (1.0 - g) * self.tau1.predict(X)

    def linear_form(self, target):
        if target == "cate" and not isinstance(self.g, LinearFit):
            g = float(self.g)
            return (g * self.tau0.coef + (1 - g) * self.tau1.coef,
                    g * self.tau0.intercept + (1 - g) * self.tau1.intercept)
        return None


def fit_slearner(X, A, Yf, base: BaseRegressorSpec = BaseRegressorSpec()) -> SLearner:
    A = check_two_arms(A)
    design = np.column_stack([np.asarray(X, dtype=float), A.astype(float)])
    return SLearner(fit_base(design, Yf, base))


def _split(X, A, Yf):
    X = np.asarray(X, dtype=float)
    Yf = np.asarray(Yf, dtype=float).ravel()
    t = A == 1
    return X[~t], Yf[~t], X[t], Yf[t]


def fit_tlearner(X, A, Yf, base: BaseRegressorSpec = BaseRegressorSpec()) -> TLearner:
    A = check_two_arms(A, min_per_arm=2)
    X0, y0, X1, y1 = _split(X, A, Yf)
    return TLearner(fit_base(X0, y0, base), fit_base(X1, y1, base))


def fit_xlearner(X, A, Yf, base: BaseRegressorSpec = BaseRegressorSpec(),
                 propensity: float | None = None, propensity_lam: float = 1.0) -> XLearner:
    """Two-stage X-learner.

    ``propensity`` fixes the weighting function to a constant instead of
    fitting a logistic regression.
    """
    A = check_two_arms(A, min_per_arm=2)
    X0, y0, X1, y1 = _split(X, A, Yf)
    mu0 = fit_base(X0, y0, base)
    mu1 = fit_base(X1, y1, base)
    d1 = y1 - mu0.predict(X1)
    d0 = mu1.predict(X0) - y0
    tau1 = fit_base(X1, d1, base)
    tau0 = fit_base(X0, d0, base)
    g = propensity if propensity is not None else fit_logistic(X, A, propensity_lam)
    return XLearner(tau0, tau1, g)
