"""Linear base regressors: ridge via normal equations, lasso via coordinate descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import sigmoid


class SingularSystemError(np.linalg.LinAlgError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} sweeps)")
        self.iterations = iterations


@dataclass(frozen=True)
class LinearFit:
    coef: np.ndarray
    intercept: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-D matrix")
    if len(y) != X.shape[0]:
        raise ValueError("X and y have different numbers of rows")
    return X, y


def fit_ridge(X, y, lam: float = 0.0, fit_intercept: bool = True) -> LinearFit:
    """Minimize ||y - Xw - b||^2 + lam ||w||^2 with the intercept unpenalized."""
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if fit_intercept:
        xm, ym = X.mean(axis=0), y.mean()
    else:
        xm, ym = np.zeros(X.shape[1]), 0.0
    Xc, yc = X - xm, y - ym
    G = Xc.T @ Xc
    G[np.diag_indices_from(G)] += lam
    if lam == 0:
        rank = np.linalg.matrix_rank(G, tol=1e-10 * max(1.0, float(np.abs(G).max())))
        if rank < G.shape[0]:
            raise SingularSystemError("normal equations are singular; use lambda > 0")
    w = np.linalg.solve(G, Xc.T @ yc)
    return LinearFit(w, float(ym - xm @ w))


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def fit_lasso(X, y, lam: float, tol: float = 1e-8, max_sweeps: int = 10000) -> LinearFit:
    """Coordinate descent on (1/2n)||y - Xw - b||^2 + lam ||w||_1.

    Columns are standardized internally (zero-variance columns get weight 0);
    the returned coefficients are on the original column scale.
    """
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    n, d = X.shape
    xm, xs = X.mean(axis=0), X.std(axis=0)
    live = xs > 0
    Z = np.zeros_like(X)
    Z[:, live] = (X[:, live] - xm[live]) / xs[live]
    ym = y.mean()
    G = Z.T @ Z / n
    c = Z.T @ (y - ym) / n
    w = np.zeros(d)
    cols = np.flatnonzero(live)
    active = cols
    full_pass = True
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in active:
            rho = c[j] - G[j] @ w + G[j, j] * w[j]
            new = soft_threshold(rho, lam) / G[j, j]
            delta = abs(new - w[j])
            if delta:
                w[j] = new
                max_delta = max(max_delta, delta)
        if max_delta < tol:
            if full_pass:
                break
            # converged on the active set; confirm with a sweep over every column
            active, full_pass = cols, True
        else:
            nz = cols[w[cols] != 0]
            if full_pass and 0 < len(nz) < len(cols):
                active, full_pass = nz, False
    else:
        raise ConvergenceError("lasso coordinate descent did not converge", max_sweeps)
    coef = np.zeros(d)
    coef[live] = w[live] / xs[live]
    return LinearFit(coef, float(ym - xm @ coef))


def fit_logistic(X, a, lam: float = 1.0, max_iter: int = 100, tol: float = 1e-10) -> LinearFit:
    """L2-penalized logistic regression by Newton's method (intercept unpenalized).

    Returns a :class:`LinearFit` on the logit scale.
    """
    X, a = _check_xy(X, a)
    n, d = X.shape
    Xa = np.column_stack([np.ones(n), X])
    beta = np.zeros(d + 1)
    pen = np.full(d + 1, lam)
    pen[0] = 0.0
    for _ in range(max_iter):
        p = sigmoid(Xa @ beta)
        grad = Xa.T @ (p - a) + pen * beta
        H = (Xa * (p * (1 - p))[:, None]).T @ Xa + np.diag(pen + 1e-12)
        step = np.linalg.solve(H, grad)
        beta -= step
        if np.max(np.abs(step)) < tol:
            break
    return LinearFit(beta[1:], float(beta[0]))
