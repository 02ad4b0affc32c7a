import numpy as np
import pytest

from cfbias.dgp import f_nl
from cfbias.learners import CATE, OUTCOMES, CateModel, register_learner, unregister_learner


class FunctionModel(CateModel):
    """Wraps known potential-outcome functions as a fitted learner."""

    capabilities = frozenset({OUTCOMES, CATE})

    def __init__(self, mu0, mu1):
        self._mu0, self._mu1 = mu0, mu1

    def predict_mu0(self, X):
        return self._mu0(np.asarray(X, dtype=float))

    def predict_mu1(self, X):
        return self._mu1(np.asarray(X, dtype=float))


def toy1_oracle(X, A, Yf, seed=0, net_overrides=None):
    """Oracle for noiseless toy1 on (possibly affinely rescaled) covariates.

    Control outcomes are f(x0) exactly, so inverting f recovers x0 and with it
    the rescaling of the first column.
    """
    X, A, Yf = np.asarray(X, float), np.asarray(A), np.asarray(Yf, float)
    ctrl = (A == 0) & (Yf > 1e-9) & (Yf < 1 - 1e-9)
    x0 = 0.5 + np.log(Yf[ctrl] / (1 - Yf[ctrl])) / 10.0
    slope, icpt = np.polyfit(X[ctrl, 0], x0, 1)

    def raw(Z):
        return icpt + slope * Z[:, 0]

    return FunctionModel(lambda Z: f_nl(raw(Z)), lambda Z: f_nl(1 - raw(Z)))


@pytest.fixture
def oracle_learner():
    register_learner("oracle-toy1", toy1_oracle)
    yield "oracle-toy1"
    unregister_learner("oracle-toy1")
