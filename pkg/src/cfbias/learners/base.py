from __future__ import annotations

import numpy as np

OUTCOMES = "outcomes"
CATE = "cate"
PROPENSITY = "propensity"


class CapabilityError(AttributeError):
    pass


class CateModel:
    """A fitted learner.

    Subclasses override the ``predict_*`` methods matching their
    ``capabilities``; the rest raise :class:`CapabilityError`. Outcome-capable
    models get ``predict_cate = mu1 - mu0`` for free.
    """

    capabilities: frozenset[str] = frozenset()

    def predict_mu0(self, X) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} does not predict potential outcomes")

    def predict_mu1(self, X) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} does not predict potential outcomes")

    def predict_cate(self, X) -> np.ndarray:
        if OUTCOMES in self.capabilities:
            return self.predict_mu1(X) - self.predict_mu0(X)
        raise CapabilityError(f"{type(self).__name__} does not predict effects")

    def predict_propensity(self, X) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} does not predict propensities")

    def linear_form(self, target: str) -> tuple[np.ndarray, float] | None:
        """``(weights, intercept)`` if ``target`` ('cate', 'mu0', 'propensity')
        is an affine function of X, else None."""
        return None


def check_two_arms(A, min_per_arm: int = 1) -> np.ndarray:
    A = np.asarray(A).ravel()
    if not np.all((A == 0) | (A == 1)):
        raise ValueError("treatment indicator must be 0/1")
    counts = np.bincount(A.astype(np.int64), minlength=2)
    if counts.min() < min_per_arm:
        raise ValueError(
            f"each arm needs at least {min_per_arm} sample(s); got {counts.tolist()}")
    return A.astype(np.int64)
