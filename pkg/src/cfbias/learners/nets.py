"""Representation networks (TARNet, CFRNet, DragonNet) and ActionNet in numpy.

One architecture covers the whole family: a ReLU representation ``phi(x)``
feeds two outcome heads and an optional linear propensity head. The loss is

    mean_i 0.5 * (h_{a_i}(phi(x_i)) - y_i)^2
    + lam_ipm  * ||mean(phi | A=0) - mean(phi | A=1)||^2
    + lam_prop * mean_i BCE(logit(phi(x_i)), a_i)

TARNet is ``lam_ipm = lam_prop = 0``; CFRNet sets ``lam_ipm``; DragonNet sets
``lam_prop``. ActionNet keeps only the propensity term. Gradients are computed
by hand (reverse mode) and trained with Adam on mini-batches, keeping the
parameters with the best validation loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..numerics import rng, sigmoid
from .base import CATE, OUTCOMES, PROPENSITY, CateModel, check_two_arms


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class NetSpec:
    rep_layers: tuple[int, ...] = (64, 64)
    head_layers: tuple[int, ...] = (32,)
    activation: str = "relu"
    epochs: int = 300
    batch: int = 128
    step_size: float = 1e-3
    seed: int = 0
    lambda_ipm: float = 0.0
    lambda_prop: float = 0.0
    validation_fraction: float = 0.2
    outcome_heads: bool = True

    def __post_init__(self):
        if any(w < 1 for w in self.rep_layers + self.head_layers):
            raise ValueError("layer widths must be >= 1")
        if self.activation != "relu":
            raise ValueError("only relu activation is supported")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.lambda_ipm < 0 or self.lambda_prop < 0:
            raise ValueError("penalty weights must be non-negative")
        if self.epochs < 1 or self.batch < 1 or self.step_size <= 0:
            raise ValueError("epochs, batch and step_size must be positive")

    @property
    def has_propensity(self) -> bool:
        return self.lambda_prop > 0 or not self.outcome_heads


Params = dict[str, np.ndarray]


def _layer_names(prefix: str, n: int) -> list[tuple[str, str]]:
    return [(f"{prefix}.{i}.W", f"{prefix}.{i}.b") for i in range(n)]


def init_params(spec: NetSpec, d: int, seed: int | None = None) -> Params:
    g = rng(spec.seed if seed is None else seed, 20)
    p: Params = {}

    def dense(name, fan_in, fan_out, gain):
        p[f"{name}.W"] = g.normal(0.0, math.sqrt(gain / fan_in), size=(fan_in, fan_out))
        p[f"{name}.b"] = np.zeros(fan_out)

    width = d
    for i, w in enumerate(spec.rep_layers):
        dense(f"rep.{i}", width, w, 2.0)
        width = w
    rep_width = width
    if spec.outcome_heads:
        for arm in (0, 1):
            width = rep_width
            for i, w in enumerate(spec.head_layers):
                dense(f"head{arm}.{i}", width, w, 2.0)
                width = w
            dense(f"head{arm}.out", width, 1, 1.0)
    if spec.has_propensity:
        dense("prop.out", rep_width, 1, 1.0)
    return p


def _mlp_forward(p: Params, names, h):
    cache = []
    for wn, bn in names:
        pre = h @ p[wn] + p[bn]
        cache.append((h, pre))
        h = np.maximum(pre, 0.0)
    return h, cache


def _mlp_backward(p: Params, names, cache, dh, grads: Params):
    for (wn, bn), (h_in, pre) in zip(reversed(names), reversed(cache)):
        dpre = dh * (pre > 0)
        grads[wn] = h_in.T @ dpre
        grads[bn] = dpre.sum(axis=0)
        dh = dpre @ p[wn].T
    return dh


def _linear_forward(p: Params, name: str, h):
    return (h @ p[f"{name}.W"] + p[f"{name}.b"])[:, 0]


def _linear_backward(p: Params, name: str, h, dout, grads: Params):
    dout = dout[:, None]
    grads[f"{name}.W"] = h.T @ dout
    grads[f"{name}.b"] = dout.sum(axis=0)
    return dout @ p[f"{name}.W"].T


def forward(spec: NetSpec, p: Params, X) -> dict[str, np.ndarray]:
    """Representation, both outcome heads and the propensity logit."""
    X = np.asarray(X, dtype=float)
    phi, _ = _mlp_forward(p, _layer_names("rep", len(spec.rep_layers)), X)
    out = {"phi": phi}
    if spec.outcome_heads:
        for arm in (0, 1):
            h, _ = _mlp_forward(p, _layer_names(f"head{arm}", len(spec.head_layers)), phi)
            out[f"y{arm}"] = _linear_forward(p, f"head{arm}.out", h)
    if spec.has_propensity:
        out["logit"] = _linear_forward(p, "prop.out", phi)
    return out


def mmd_linear(rep0, rep1) -> float:
    """Squared Euclidean distance between the column means of two samples."""
    rep0 = np.atleast_2d(np.asarray(rep0, dtype=float))
    rep1 = np.atleast_2d(np.asarray(rep1, dtype=float))
    if rep0.shape[0] == 0 or rep1.shape[0] == 0:
        raise ValueError("both samples must be non-empty")
    if rep0.shape[1] != rep1.shape[1]:
        raise ValueError("samples must have equal width")
    diff = rep0.mean(axis=0) - rep1.mean(axis=0)
    return float(diff @ diff)


def _softplus(s):
    return np.logaddexp(0.0, s)


def loss_and_grads(spec: NetSpec, p: Params, X, A, y=None) -> tuple[float, Params]:
    """Total training loss on a batch and its gradient w.r.t. every parameter."""
    X = np.asarray(X, dtype=float)
    A = np.asarray(A).ravel().astype(np.int64)
    n = X.shape[0]
    rep_names = _layer_names("rep", len(spec.rep_layers))
    phi, rep_cache = _mlp_forward(p, rep_names, X)
    grads: Params = {}
    dphi = np.zeros_like(phi)
    loss = 0.0

    if spec.outcome_heads:
        y = np.asarray(y, dtype=float).ravel()
        for arm in (0, 1):
            names = _layer_names(f"head{arm}", len(spec.head_layers))
            h, cache = _mlp_forward(p, names, phi)
            pred = _linear_forward(p, f"head{arm}.out", h)
            mask = A == arm
            resid = np.where(mask, pred - y, 0.0)
            loss += 0.5 * float(resid @ resid) / n
            dh = _linear_backward(p, f"head{arm}.out", h, resid / n, grads)
            dphi += _mlp_backward(p, names, cache, dh, grads)

        if spec.lambda_ipm > 0:
            t = A == 1
            n1 = int(t.sum())
            n0 = n - n1
            if n0 and n1:  # skipped for single-arm batches
                diff = phi[~t].mean(axis=0) - phi[t].mean(axis=0)
                loss += spec.lambda_ipm * float(diff @ diff)
                dphi[~t] += 2.0 * spec.lambda_ipm * diff / n0
                dphi[t] -= 2.0 * spec.lambda_ipm * diff / n1

    if spec.has_propensity:
        weight = spec.lambda_prop if spec.outcome_heads else 1.0
        s = _linear_forward(p, "prop.out", phi)
        loss += weight * float(np.mean(_softplus(s) - A * s))
        ds = weight * (sigmoid(s) - A) / n
        dphi += _linear_backward(p, "prop.out", phi, ds, grads)

    _mlp_backward(p, rep_names, rep_cache, dphi, grads)
    if not math.isfinite(loss):
        raise TrainingDivergedError("non-finite training loss")
    return loss, grads


def mlp_forward_backward(spec: NetSpec, params: Params, batch) -> tuple[float, Params]:
    """``batch`` is ``(X, A, y)``; ``y`` is ignored for propensity-only nets."""
    X, A, y = batch
    return loss_and_grads(spec, params, X, A, y)


class Adam:
    def __init__(self, params: Params, step_size: float, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = step_size, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _split_validation(n: int, A, frac: float, g: np.random.Generator):
    perm = g.permutation(n)
    n_val = int(round(frac * n))
    if n_val == 0 or n - n_val < 2:
        return perm, perm[:0]
    val, tr = perm[:n_val], perm[n_val:]
    # both arms must remain in the training part
    if A is not None and len(np.unique(A[tr])) < 2:
        return perm, perm[:0]
    return tr, val


def train(spec: NetSpec, X, A, y=None) -> tuple[Params, dict]:
    """Mini-batch Adam with a best-validation-loss snapshot."""
    X = np.asarray(X, dtype=float)
    A = np.asarray(A).ravel().astype(np.int64)
    g = rng(spec.seed, 21)
    params = init_params(spec, X.shape[1])
    tr, val = _split_validation(len(X), A, spec.validation_fraction, g)
    opt = Adam(params, spec.step_size)
    best = {k: v.copy() for k, v in params.items()}
    best_loss, best_epoch = math.inf, 0
    yy = None if y is None else np.asarray(y, dtype=float).ravel()
    history = []
    for epoch in range(1, spec.epochs + 1):
        order = tr[g.permutation(len(tr))]
        for start in range(0, len(order), spec.batch):
            idx = order[start:start + spec.batch]
            _, grads = loss_and_grads(spec, params, X[idx], A[idx],
                                      None if yy is None else yy[idx])
            opt.step(params, grads)
        monitor = val if len(val) else tr
        vloss, _ = loss_and_grads(spec, params, X[monitor], A[monitor],
                                  None if yy is None else yy[monitor])
        history.append(vloss)
        if vloss < best_loss:
            best_loss, best_epoch = vloss, epoch
            best = {k: v.copy() for k, v in params.items()}
    return best, {"best_epoch": best_epoch, "best_val_loss": best_loss, "history": history}


class NetModel(CateModel):
    def __init__(self, spec: NetSpec, params: Params, y_mean: float = 0.0, y_scale: float = 1.0,
                 info: dict | None = None):
        self.spec, self.params = spec, params
        self.y_mean, self.y_scale = y_mean, y_scale
        self.info = info or {}
        caps = set()
        if spec.outcome_heads:
            caps |= {OUTCOMES, CATE}
        if spec.has_propensity:
            caps.add(PROPENSITY)
        self.capabilities = frozenset(caps)

    def _out(self, X):
        return forward(self.spec, self.params, X)

    def predict_mu0(self, X):
        if OUTCOMES not in self.capabilities:
            return super().predict_mu0(X)
        return self._out(X)["y0"] * self.y_scale + self.y_mean

    def predict_mu1(self, X):
        if OUTCOMES not in self.capabilities:
            return super().predict_mu1(X)
        return self._out(X)["y1"] * self.y_scale + self.y_mean

    def predict_cate(self, X):
        if OUTCOMES not in self.capabilities:
            return super().predict_cate(X)
        out = self._out(X)
        return (out["y1"] - out["y0"]) * self.y_scale

    def predict_propensity(self, X):
        if PROPENSITY not in self.capabilities:
            return super().predict_propensity(X)
        return sigmoid(self._out(X)["logit"])

    def linear_form(self, target):
        if self.spec.rep_layers or (target != "propensity" and self.spec.head_layers):
            return None
        p = self.params
        if target == "propensity" and PROPENSITY in self.capabilities:
            return p["prop.out.W"][:, 0].copy(), float(p["prop.out.b"][0])
        if OUTCOMES not in self.capabilities:
            return None
        w0, b0 = p["head0.out.W"][:, 0] * self.y_scale, p["head0.out.b"][0] * self.y_scale
        if target == "mu0":
            return w0, float(b0 + self.y_mean)
        if target == "cate":
            w1 = p["head1.out.W"][:, 0] * self.y_scale
            b1 = p["head1.out.b"][0] * self.y_scale
            return w1 - w0, float(b1 - b0)
        return None


def fit_tarnet_family(X, A, Yf, spec: NetSpec = NetSpec()) -> NetModel:
    """Fit TARNet / CFRNet / DragonNet depending on the penalty weights in ``spec``.

    Outcomes are standardized internally; predictions come back in outcome units.
    """
    A = check_two_arms(A)
    spec = replace(spec, outcome_heads=True)
    y = np.asarray(Yf, dtype=float).ravel()
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    params, info = train(spec, X, A, (y - y_mean) / y_scale)
    return NetModel(spec, params, y_mean, y_scale, info)


def fit_actionnet(X, A, spec: NetSpec = NetSpec()) -> NetModel:
    """Propensity network imitating the observed assignments."""
    A = check_two_arms(A)
    spec = replace(spec, outcome_heads=False, lambda_ipm=0.0)
    params, info = train(spec, X, A)
    return NetModel(spec, params, info=info)
