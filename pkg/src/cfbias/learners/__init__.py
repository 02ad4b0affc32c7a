"""CATE learners and the name registry used by experiment configs.

Names: ``{s,t,x}learner-{ols,ridge,lasso}`` (optionally ``:<lambda>``),
``tarnet``, ``cfrnet-<lambda_ipm>``, ``dragonnet-<lambda_prop>``, ``actionnet``.
"""

from __future__ import annotations

import re
from dataclasses import replace
from typing import Callable

from .base import CATE, OUTCOMES, PROPENSITY, CapabilityError, CateModel
from .linear import (ConvergenceError, LinearFit, SingularSystemError, fit_lasso,
                     fit_logistic, fit_ridge)
from .meta import (BaseRegressorSpec, SLearner, TLearner, XLearner, fit_slearner,
                   fit_tlearner, fit_xlearner)
from .nets import (NetModel, NetSpec, TrainingDivergedError, fit_actionnet,
                   fit_tarnet_family, mlp_forward_backward, mmd_linear)

DEFAULT_LAMBDA = {"ols": 0.0, "ridge": 1.0, "lasso": 0.01}

DEFAULT_LEARNERS = (
    "slearner-ridge", "tlearner-lasso", "xlearner-ridge", "tarnet",
    "cfrnet-0.0001", "cfrnet-0.001", "cfrnet-0.01",
    "dragonnet-1", "dragonnet-2", "dragonnet-4", "actionnet",
)

# fit(X, A, Yf, seed, net_overrides) -> CateModel
Factory = Callable[..., CateModel]
_CUSTOM: dict[str, Factory] = {}

_META = re.compile(r"^([stx])learner-(ols|ridge|lasso)(?::([0-9.eE+-]+))?$")
_NET = re.compile(r"^(tarnet|actionnet|cfrnet-([0-9.eE+-]+)|dragonnet-([0-9.eE+-]+))$")


def register_learner(name: str, factory: Factory) -> None:
    """Add a learner under ``name`` (used e.g. for oracle test hooks)."""
    _CUSTOM[name] = factory


def unregister_learner(name: str) -> None:
    _CUSTOM.pop(name, None)


def is_valid_learner(name: str) -> bool:
    return name in _CUSTOM or bool(_META.match(name) or _NET.match(name))


def make_learner(name: str) -> Factory:
    if name in _CUSTOM:
        return _CUSTOM[name]
    m = _META.match(name)
    if m:
        kind = m.group(2)
        lam = float(m.group(3)) if m.group(3) else DEFAULT_LAMBDA[kind]
        base = BaseRegressorSpec(kind, lam)
        fit = {"s": fit_slearner, "t": fit_tlearner, "x": fit_xlearner}[m.group(1)]

        def meta_factory(X, A, Yf, seed=0, net_overrides=None):
            return fit(X, A, Yf, base)

        return meta_factory
    m = _NET.match(name)
    if m:
        lam_ipm = float(m.group(2)) if m.group(2) else 0.0
        lam_prop = float(m.group(3)) if m.group(3) else 0.0

        def net_factory(X, A, Yf, seed=0, net_overrides=None):
            spec = replace(NetSpec(seed=seed, lambda_ipm=lam_ipm, lambda_prop=lam_prop),
                           **(net_overrides or {}))
            if name == "actionnet":
                return fit_actionnet(X, A, spec)
            return fit_tarnet_family(X, A, Yf, spec)

        return net_factory
    raise ValueError(f"unknown learner {name!r}")


__all__ = [
    "CATE", "OUTCOMES", "PROPENSITY", "CapabilityError", "CateModel", "ConvergenceError",
    "LinearFit", "SingularSystemError", "fit_lasso", "fit_logistic", "fit_ridge",
    "BaseRegressorSpec", "SLearner", "TLearner", "XLearner", "fit_slearner",
    "fit_tlearner", "fit_xlearner", "NetModel", "NetSpec", "TrainingDivergedError",
    "fit_actionnet", "fit_tarnet_family", "mlp_forward_backward", "mmd_linear",
    "DEFAULT_LEARNERS", "register_learner", "unregister_learner", "is_valid_learner",
    "make_learner",
]
