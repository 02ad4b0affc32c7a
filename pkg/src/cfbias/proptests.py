"""Executable property checks for the bias measures and the toy benchmarks.

Each ``check_*`` function returns a plain dict report with a boolean
``passed`` entry, so the same checks drive the test suite and
``cfbias selftest``.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .bias import bias_report, x_bias_analytic
from .dgp import TOY_KINDS, gen_toy
from .harness.config import ExperimentConfig
from .harness.sweep import run_sweep
from .numerics import binary_entropy, rng
from .policy import PolicySpec, assign

PROP1_SOURCES = ("Y0", "Y1", "Effect", "ToyCanonical")
PROP1_BETAS = (0.0, 2.0, 8.0, 16.0)
PROP1_EPS = 0.05
# calibration z-score beyond which the supplied propensities are rejected
CALIBRATION_Z = 6.0

# trend thresholds for the toy findings (calibration constants, see README)
TOY1_MIN_RATIO = 1.5
TOY2_MAX_RATIO = 1.25
TOY_LEARNERS = ("tlearner-lasso", "xlearner-lasso")


def calibration_z(pi, A) -> float:
    """Standardized excess cross-entropy of ``A`` under the propensities ``pi``.

    For ``A_i ~ Bernoulli(pi_i)`` the surprisal ``-log2 p(A_i)`` has mean
    ``h(pi_i)``, so the summed excess is centred with a known variance. A
    propensity vector that does not belong to ``A`` (e.g. shuffled) gives a
    large positive value, or ``inf`` if it rules out an observed arm.
    """
    pi = np.asarray(pi, dtype=float)
    A = np.asarray(A)
    p_obs = np.where(A == 1, pi, 1.0 - pi)
    if np.any(p_obs <= 0):
        return math.inf
    excess = float(np.sum(-np.log2(p_obs) - binary_entropy(pi)))
    inner = (pi > 0) & (pi < 1)
    logit = np.log2(pi[inner] / (1 - pi[inner]))
    var = float(np.sum(pi[inner] * (1 - pi[inner]) * logit**2))
    if var == 0.0:
        return 0.0 if abs(excess) < 1e-9 else math.inf
    return excess / math.sqrt(var)


def check_proposition_1(kinds: Iterable[str] = TOY_KINDS, sources: Iterable[str] = PROP1_SOURCES,
                        betas: Iterable[float] = PROP1_BETAS, seeds: Iterable[int] = (0, 1, 2),
                        n: int = 5000, eps: float = PROP1_EPS,
                        pi_transform: Callable[[np.ndarray, int], np.ndarray] | None = None) -> dict:
    """Ordering of the bias measures under a known, non-confounded policy.

    Every cell must satisfy ``b_x + eps >= b_joint >= max(b_y0, b_y1, b_effect) - eps``
    and its propensities must be calibrated against the drawn arms.
    ``pi_transform`` replaces the true propensities before ``b_x`` is computed;
    it exists for negative controls.
    """
    cells, violations = [], []
    for kind in kinds:
        for seed in seeds:
            ds = gen_toy(kind, n, seed)
            for source in sources:
                for beta in betas:
                    obs = assign(ds, PolicySpec(source, float(beta), seed))
                    rep = bias_report(obs)
                    pi = obs.pi if pi_transform is None else np.asarray(pi_transform(obs.pi, seed))
                    b_x = x_bias_analytic(pi, obs.A)
                    z = calibration_z(pi, obs.A)
                    cell = {"kind": kind, "source": source, "beta": float(beta), "seed": seed,
                            "b_x": b_x, "b_joint": rep.b_joint, "b_y0": rep.b_y0,
                            "b_y1": rep.b_y1, "b_effect": rep.b_effect, "calibration_z": z}
                    problems = []
                    if b_x + eps < rep.b_joint:
                        problems.append("b_x < b_joint")
                    if rep.b_joint + eps < max(rep.b_y0, rep.b_y1, rep.b_effect):
                        problems.append("b_joint < marginal")
                    if not abs(z) <= CALIBRATION_Z:
                        problems.append("propensities inconsistent with assignments")
                    cell["problems"] = problems
                    cells.append(cell)
                    if problems:
                        violations.append(cell)
    return {"name": "proposition_1", "passed": not violations, "n_cells": len(cells),
            "violations": violations, "cells": cells}


def check_proposition_2(n: int = 1000, seed: int = 0) -> dict:
    """Full X-bias forces an overlap violation, but not conversely."""
    g = rng(seed, 60)
    failures = []

    # deterministic balanced policy
    pi = np.zeros(n)
    pi[g.permutation(n)[: n // 2]] = 1.0
    A = (pi == 1).astype(np.int64)
    b_det = x_bias_analytic(pi, A)
    if b_det != 1.0:
        failures.append(f"deterministic policy gives b_x={b_det}, expected exactly 1")
    if not (pi.min() == 0.0 or pi.max() == 1.0):
        failures.append("deterministic policy does not violate overlap")

    # randomized trial
    pi_rct = np.full(n, 0.5)
    A_rct = (g.random(n) < 0.5).astype(np.int64)
    b_rct = x_bias_analytic(pi_rct, A_rct)
    if b_rct != 0.0:
        failures.append(f"RCT gives b_x={b_rct}, expected 0")
    if not (pi_rct.min() > 0 and pi_rct.max() < 1):
        failures.append("RCT violates overlap")

    # converse: a quarter of units never treated, a quarter always, half by coin flip
    pi_mix = np.full(n, 0.5)
    order = g.permutation(n)
    pi_mix[order[: n // 4]] = 0.0
    pi_mix[order[n // 4: n // 2]] = 1.0
    A_mix = (g.random(n) < pi_mix).astype(np.int64)
    b_mix = x_bias_analytic(pi_mix, A_mix)
    overlap_violated = pi_mix.min() == 0.0 or pi_mix.max() == 1.0
    if not overlap_violated:
        failures.append("mixed policy should violate overlap")
    if not b_mix < 1.0:
        failures.append(f"mixed policy gives b_x={b_mix}; overlap violation must not force b_x = 1")
    if abs(b_mix - 0.5) > 0.05:
        failures.append(f"mixed policy gives b_x={b_mix}, expected about 0.5")
    return {"name": "proposition_2", "passed": not failures, "failures": failures,
            "b_x_deterministic": b_det, "b_x_rct": b_rct, "b_x_mixed": b_mix}


def _toy_sweep(kind: str, seeds, n: int, folds: int, learners=TOY_LEARNERS):
    cfg = ExperimentConfig(dataset={"kind": kind, "n": n}, policy_sources=["ToyCanonical"],
                           learners=list(learners), beta_grid=[0.0, 16.0], seeds=list(seeds),
                           folds=folds)
    return run_sweep(cfg)


def check_toy_findings(seeds: Iterable[int] = (0, 1, 2), n: int = 4000, folds: int = 2) -> dict:
    """Reduced sweeps on the four toys with the canonical policy at beta 0 and 16."""
    seeds = list(seeds)
    checks: dict[str, dict] = {}

    def record(name, value, ok, **extra):
        checks[name] = {"value": value, "passed": bool(ok), **extra}

    t_l, x_l = TOY_LEARNERS
    tab = {k: _toy_sweep(k, seeds, n, folds) for k in TOY_KINDS}

    def ratio(kind, metric, learner):
        return (tab[kind].mean(metric, learner=learner, beta=16.0)
                / tab[kind].mean(metric, learner=learner, beta=0.0))

    r1 = ratio("toy1", "pehe", t_l)
    record("toy1_pehe_ratio", r1, r1 > TOY1_MIN_RATIO, threshold=TOY1_MIN_RATIO)
    cf0 = tab["toy1"].mean("rmse_cf", learner=t_l, beta=0.0)
    cf16 = tab["toy1"].mean("rmse_cf", learner=t_l, beta=16.0)
    record("toy1_cf_rmse_increases", [cf0, cf16], cf16 > cf0)
    p16 = tab["toy1"].bias_mean("prec_ass_pi", beta=16.0)
    record("toy1_prec_ass_pi_beta16", p16, p16 >= 0.95, threshold=0.95)

    r2 = ratio("toy2", "pehe", t_l)
    record("toy2_pehe_ratio", r2, r2 < TOY2_MAX_RATIO, threshold=TOY2_MAX_RATIO)
    bx2, be2 = (tab["toy2"].bias_mean(f, beta=16.0) for f in ("b_x", "b_effect"))
    record("toy2_bias_beta16", {"b_x": bx2, "b_effect": be2}, bx2 >= 0.9 and be2 <= 0.05)

    rx, rt = ratio("toy3", "pehe", x_l), ratio("toy3", "pehe", t_l)
    record("toy3_x_degrades_more", {"xlearner": rx, "tlearner": rt}, rx > rt)

    r_y1, r_y0 = ratio("toy4", "rmse_y1_cf", t_l), ratio("toy4", "rmse_y0_cf", t_l)
    record("toy4_arm_asymmetry", {"rmse_y1_cf": r_y1, "rmse_y0_cf": r_y0}, r_y1 < r_y0)
    by0, by1 = (tab["toy4"].bias_mean(f, beta=16.0) for f in ("b_y0", "b_y1"))
    record("toy4_bias_beta16", {"b_y0": by0, "b_y1": by1}, by0 >= 0.6 and by1 <= 0.1)

    failed_cells = sum(len(t.failed) for t in tab.values())
    record("no_failed_cells", failed_cells, failed_cells == 0)
    return {"name": "toy_findings", "passed": all(c["passed"] for c in checks.values()),
            "checks": checks}


def run_selftest(quick: bool = False) -> dict:
    """Run every check; ``quick`` shrinks the grids for a fast smoke test."""
    if quick:
        reports = [
            check_proposition_1(seeds=(0,), betas=(0.0, 16.0), n=2000),
            check_proposition_2(),
            check_toy_findings(seeds=(0,), n=2000),
        ]
    else:
        reports = [check_proposition_1(), check_proposition_2(), check_toy_findings()]
    for r in reports:
        r.pop("cells", None)
    return {"passed": all(r["passed"] for r in reports), "quick": quick, "reports": reports}
