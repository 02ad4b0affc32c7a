import math

import numpy as np
import pytest

from cfbias.dgp import (FeaturePartition, LinearOutcomeSpec, PotentialDataset, f_nl, gen_toy,
                        random_linear_spec, simulate_linear_outcomes, synthetic_covariates,
                        toy_canonical_score, toy_outcomes, true_cate)


def test_f_nl_midpoint_and_ends():
    assert f_nl(0.5) == pytest.approx(0.5)
    assert f_nl(0.0) == pytest.approx(1 / (1 + math.exp(5)), abs=1e-12)


def test_toy1_corner_values():
    Y0, Y1 = toy_outcomes("toy1", np.array([[0.0, 0.3]]))
    assert Y0[0] == pytest.approx(0.0066929, abs=1e-6)
    assert Y1[0] == pytest.approx(0.9933071, abs=1e-6)
    Y0, _ = toy_outcomes("toy1", np.array([[0.5, 0.9]]))
    assert Y0[0] == pytest.approx(0.5)


def test_toy4_symmetric_point():
    Y0, Y1 = toy_outcomes("toy4", np.array([[0.5, 0.5]]))
    assert Y0[0] == pytest.approx(0.5) and Y1[0] == pytest.approx(0.5)


def test_toy4_effect_by_construction():
    ds = gen_toy("toy4", 200, seed=3)
    np.testing.assert_allclose(true_cate(ds), f_nl(ds.X[:, 1]) - f_nl(ds.X[:, 0]))


def test_toy_generation_is_seeded():
    a, b = gen_toy("toy3", 50, 11), gen_toy("toy3", 50, 11)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, gen_toy("toy3", 50, 12).X)
    assert a.X.min() >= 0 and a.X.max() <= 1


def test_toy_noise_only_touches_outcomes():
    clean, noisy = gen_toy("toy1", 100, 0), gen_toy("toy1", 100, 0, noise_sd=0.1)
    np.testing.assert_array_equal(clean.X, noisy.X)
    assert 0.05 < np.std(noisy.Y0 - clean.Y0) < 0.15


def test_toy_canonical_scores():
    X = np.array([[0.2, 0.7]])
    assert toy_canonical_score("toy1", X)[0] == pytest.approx(0.8)
    assert toy_canonical_score("toy2", X)[0] == pytest.approx(0.3)
    assert toy_canonical_score("toy3", X)[0] == pytest.approx(0.1)
    assert toy_canonical_score("toy4", X)[0] == pytest.approx(0.2)


def test_gen_toy_rejects_bad_input():
    with pytest.raises(ValueError):
        gen_toy("toy9", 10, 0)
    with pytest.raises(ValueError):
        gen_toy("toy1", 1, 0)


def test_partition_must_be_disjoint():
    with pytest.raises(ValueError):
        FeaturePartition(prognostic=(0, 1), predictive=(1,))
    with pytest.raises(IndexError):
        FeaturePartition(prognostic=(3,)).validate(3)
    p = FeaturePartition((0,), (2,), (1,))
    assert FeaturePartition.from_dict(p.to_dict()) == p


def test_linear_identity_mechanism():
    X = np.array([[1.0, 9.0], [2.0, 8.0], [3.0, 7.0]])
    spec = LinearOutcomeSpec(FeaturePartition(prognostic=(0,)), np.array([1.0]), np.array([]),
                             noise_sd=0.0)
    ds = simulate_linear_outcomes(X, spec)
    np.testing.assert_allclose(ds.Y0, X[:, 0])
    np.testing.assert_allclose(true_cate(ds), 0.0)


def test_linear_pure_effect_mechanism():
    X = np.array([[1.0, 9.0], [2.0, 8.0], [3.0, 7.0]])
    spec = LinearOutcomeSpec(FeaturePartition(predictive=(1,)), np.array([]), np.array([2.0]),
                             noise_sd=0.0)
    ds = simulate_linear_outcomes(X, spec)
    np.testing.assert_allclose(ds.Y0, 0.0)
    np.testing.assert_allclose(true_cate(ds), 2 * X[:, 1])


def test_linear_hand_arithmetic():
    X = np.array([[1.0, 3.0], [0.0, 0.0]])
    spec = LinearOutcomeSpec(FeaturePartition(prognostic=(0,), predictive=(1,)),
                             np.array([0.5]), np.array([-1.0]), noise_sd=0.0)
    ds = simulate_linear_outcomes(X, spec)
    assert ds.Y0[0] == pytest.approx(0.5)
    assert ds.Y1[0] == pytest.approx(-2.5)
    assert true_cate(ds)[0] == pytest.approx(-3.0)


def test_random_linear_spec_properties():
    s = random_linear_spec(100, 20, 20, seed=4)
    idx = s.partition.prognostic + s.partition.predictive
    assert len(set(idx)) == 40
    assert len(s.partition.control) == 60
    w = np.concatenate([s.w_prog, s.w_pred])
    assert np.all((w >= 0) & (w <= 1))
    assert random_linear_spec(100, 20, 20, seed=4) == s
    with pytest.raises(ValueError):
        random_linear_spec(10, 8, 8)


def test_default_noise_is_tenth_of_signal_sd():
    X = synthetic_covariates(4000, 30, seed=1)
    spec = random_linear_spec(30, 5, 5, seed=2)
    clean = simulate_linear_outcomes(X, LinearOutcomeSpec(spec.partition, spec.w_prog, spec.w_pred,
                                                          noise_sd=0.0, seed=2))
    noisy = simulate_linear_outcomes(X, spec)
    ref = 0.1 * np.std(np.concatenate([clean.Y0, clean.Y1]))
    assert np.std(noisy.Y0 - clean.Y0) == pytest.approx(ref, rel=0.1)


def test_true_cate_subtraction():
    ds = PotentialDataset(np.zeros((2, 1)), np.array([1.0, 2.0]), np.array([3.0, 1.0]))
    np.testing.assert_array_equal(true_cate(ds), [2.0, -1.0])
    same = PotentialDataset(np.zeros((2, 1)), np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    np.testing.assert_array_equal(true_cate(same), 0.0)


def test_potential_dataset_validates():
    with pytest.raises(ValueError):
        PotentialDataset(np.zeros((3, 1)), np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        PotentialDataset(np.array([[np.nan]]), np.zeros(1), np.zeros(1))


def test_synthetic_covariates_are_standardized():
    X = synthetic_covariates(500, 7, seed=0)
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(X.std(axis=0), 1, atol=1e-12)
