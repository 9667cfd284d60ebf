"""Trainer correctness: costs, KKT conditions, objectives, serialization.

Oracles here are written against dense numpy math, independent of the
kernel implementations under test.
"""

import warnings

import numpy as np
import pytest

from conftest import two_class_problem
from pubag.classifiers import (
    TrainConfig,
    assemble_problem,
    classifier_from_dict,
    classifier_to_dict,
    decision,
    load_classifier,
    logit_gradient,
    logit_objective,
    per_class_costs,
    save_classifier,
    svm_dual_objective,
    svm_kkt_violation,
    svm_primal_objective,
    train_logit,
    train_svm,
)
from pubag.data import Dataset
from pubag.errors import ConfigError, DataError, UnsupportedConfigurationError


def test_balanced_cost_rule():
    cfg = TrainConfig(c=2.0)
    c_pos, c_neg = per_class_costs(cfg, 5, 45)
    # equal per-class penalty mass, costs summing to the total
    assert c_pos * 5 == pytest.approx(c_neg * 45)
    assert c_pos + c_neg == pytest.approx(2.0)
    assert c_pos == pytest.approx(2.0 * 45 / 50)
    assert per_class_costs(TrainConfig(cost_split=(0.3, 0.7)), 5, 45) == (0.3, 0.7)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(c=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(cost_split="equal")
    with pytest.raises(ConfigError):
        TrainConfig(cost_split=(1.0, -1.0))
    with pytest.raises(ConfigError):
        TrainConfig(kernel="poly")
    with pytest.raises(ConfigError):
        TrainConfig(kernel="rbf", rbf_sigma=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(bias_mode="free")
    with pytest.raises(ConfigError):
        TrainConfig(tolerance=-1e-3)


def _dense_primal(ds, rows, y, cost, w, b):
    x = ds.to_dense()[rows]
    hinge = np.maximum(0.0, 1.0 - y * (x @ w + b))
    return 0.5 * (w @ w + b * b) + cost @ hinge


def _dense_kkt(ds, rows, y, cost, alpha, gram):
    g = gram @ (alpha * y) * y - 1.0
    pg = g.copy()
    pg[(alpha <= 0) & (g > 0)] = 0.0
    pg[(alpha >= cost) & (g < 0)] = 0.0
    return np.abs(pg).max()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_svm_satisfies_kkt_and_positive_gap(seed):
    rng = np.random.default_rng(seed)
    ds, pos, neg = two_class_problem(rng, rng.integers(3, 12), rng.integers(5, 25), 4)
    cfg = TrainConfig(c=rng.choice([0.1, 1.0, 10.0]), tolerance=1e-5, seed=seed)
    clf = train_svm(ds, pos, neg, cfg)
    assert clf.diagnostics.converged
    rows, y, cost = assemble_problem(pos, neg, cfg)
    # independent KKT recompute over the bias-augmented Gram
    x = np.hstack([ds.to_dense()[rows], np.ones((len(rows), 1))])
    assert _dense_kkt(ds, rows, y, cost, clf.alpha, x @ x.T) <= 1e-5 + 1e-12
    assert svm_kkt_violation(clf, ds, pos, neg) <= 1e-5
    # weak duality with a tight gap at this tolerance
    primal = svm_primal_objective(ds, rows, y, cost, clf.weights, clf.bias)
    dual = svm_dual_objective(ds, rows, y, clf.alpha)
    assert primal >= dual - 1e-9
    assert primal - dual < 1e-2
    assert primal == pytest.approx(
        _dense_primal(ds, rows, y, cost, clf.weights, clf.bias), abs=1e-9)
    # dual box constraints
    assert np.all(clf.alpha >= -1e-12)
    assert np.all(clf.alpha <= cost + 1e-12)


def test_linear_fast_path_equals_expansion_path():
    rng = np.random.default_rng(7)
    for _ in range(5):
        ds, pos, neg = two_class_problem(rng, rng.integers(3, 10), rng.integers(4, 20), 5)
        cfg = TrainConfig(c=1.0, seed=3)
        fast = train_svm(ds, pos, neg, cfg)
        slow = train_svm(ds, pos, neg, cfg, use_fast_path=False)
        assert not slow.is_linear
        got = decision(slow, ds)
        np.testing.assert_allclose(decision(fast, ds), got, atol=1e-6)


def test_rbf_svm_separates_ring_data():
    # radially separated classes: linearly impossible, easy for rbf
    rng = np.random.default_rng(8)
    inner = rng.normal(0.0, 0.3, size=(20, 2))
    theta = rng.uniform(0, 2 * np.pi, 30)
    outer = np.stack([3 * np.cos(theta), 3 * np.sin(theta)], axis=1)
    outer += rng.normal(0.0, 0.1, outer.shape)
    ds = Dataset.from_dense(np.vstack([inner, outer]))
    pos = np.arange(20)
    neg = np.arange(20, 50)
    cfg = TrainConfig(c=50.0, kernel="rbf", rbf_sigma=1.0, seed=1)
    clf = train_svm(ds, pos, neg, cfg)
    scores = decision(clf, ds)
    assert np.all(scores[:20] > 0)
    assert np.all(scores[20:] < 0)
    lin = train_svm(ds, pos, neg, TrainConfig(c=50.0, seed=1))
    lin_acc = np.mean(np.sign(decision(lin, ds)) == np.where(np.arange(50) < 20, 1, -1))
    assert lin_acc < 0.8


def test_svm_perturbation_cannot_beat_optimum():
    rng = np.random.default_rng(9)
    ds, pos, neg = two_class_problem(rng, 6, 14, 4)
    cfg = TrainConfig(c=1.0, tolerance=1e-6, seed=2)
    clf = train_svm(ds, pos, neg, cfg)
    rows, y, cost = assemble_problem(pos, neg, cfg)
    base = _dense_primal(ds, rows, y, cost, clf.weights, clf.bias)
    w_aug = np.concatenate([clf.weights, [clf.bias]])
    scale = 0.1 * max(np.linalg.norm(w_aug), 1.0)
    for _ in range(200):
        delta = rng.normal(0.0, 1.0, len(w_aug))
        delta *= rng.random() * scale / np.linalg.norm(delta)
        cand = w_aug + delta
        assert _dense_primal(ds, rows, y, cost, cand[:-1], cand[-1]) >= base - 1e-9


def test_logit_newton_reaches_stationarity():
    rng = np.random.default_rng(10)
    for _ in range(5):
        ds, pos, neg = two_class_problem(rng, rng.integers(3, 10), rng.integers(4, 20), 5)
        cfg = TrainConfig(c=float(rng.choice([0.1, 1.0, 5.0])), seed=0)
        clf = train_logit(ds, pos, neg, cfg)
        assert clf.diagnostics.converged
        rows, y, cost = assemble_problem(pos, neg, cfg)
        # independent dense gradient at the reported optimum
        x = np.hstack([ds.to_dense()[rows], np.ones((len(rows), 1))])
        w_aug = np.concatenate([clf.weights, [clf.bias]])
        sig = 1.0 / (1.0 + np.exp(y * (x @ w_aug)))
        grad = x.T @ (-cost * sig * y) + w_aug / cfg.c
        assert np.abs(grad).max() <= 1e-6
        # the loss trace never increases (Armijo guard)
        trace = clf.diagnostics.loss_trace
        assert np.all(np.diff(trace) <= 1e-12)


def test_logit_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    ds, pos, neg = two_class_problem(rng, 5, 9, 4)
    cfg = TrainConfig(c=2.0)
    rows, y, cost = assemble_problem(pos, neg, cfg)
    w = rng.normal(0.0, 0.5, 4)
    b = rng.normal()
    g = logit_gradient(ds, rows, y, cost, cfg.c, w, b)
    eps = 1e-6
    for j in range(5):
        wp, wm = w.copy(), w.copy()
        bp = bm = b
        if j < 4:
            wp[j] += eps
            wm[j] -= eps
        else:
            bp, bm = b + eps, b - eps
        fd = (logit_objective(ds, rows, y, cost, cfg.c, wp, bp)
              - logit_objective(ds, rows, y, cost, cfg.c, wm, bm)) / (2 * eps)
        assert abs(fd - g[j]) < 1e-4 * max(1.0, abs(g[j]))


def test_logit_rejects_rbf():
    rng = np.random.default_rng(12)
    ds, pos, neg = two_class_problem(rng, 4, 6, 3)
    with pytest.raises(UnsupportedConfigurationError):
        train_logit(ds, pos, neg, TrainConfig(kernel="rbf"))


def test_empty_class_rejected():
    rng = np.random.default_rng(13)
    ds, pos, neg = two_class_problem(rng, 4, 6, 3)
    with pytest.raises(DataError):
        train_svm(ds, np.array([], dtype=np.int64), neg, TrainConfig())


def test_non_convergence_warns_and_flags():
    rng = np.random.default_rng(14)
    ds, pos, neg = two_class_problem(rng, 10, 30, 6, sep=0.3)
    cfg = TrainConfig(c=100.0, tolerance=1e-10, max_iterations=2, seed=0)
    with pytest.warns(RuntimeWarning):
        clf = train_svm(ds, pos, neg, cfg)
    assert not clf.diagnostics.converged
    assert clf.diagnostics.violation > 1e-10


def test_decision_handles_width_mismatch():
    rng = np.random.default_rng(15)
    ds, pos, neg = two_class_problem(rng, 4, 8, 5)
    clf = train_svm(ds, pos, neg, TrainConfig())
    narrow = Dataset.from_dense(ds.to_dense()[:, :3])
    # narrower data: missing trailing features read as zero
    got = decision(clf, narrow)
    want = narrow.to_dense() @ clf.weights[:3] + clf.bias
    np.testing.assert_allclose(got, want, atol=1e-12)
    wide = Dataset.from_dense(np.ones((2, 9)))
    with pytest.raises(DataError):
        decision(clf, wide)


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(16)
    ds, pos, neg = two_class_problem(rng, 5, 9, 4)
    probe = Dataset.from_dense(rng.normal(size=(6, 4)))
    for cfg, trainer in [
        (TrainConfig(c=0.5, seed=4), train_svm),
        (TrainConfig(c=0.5, kernel="rbf", rbf_sigma=2.0, seed=4), train_svm),
        (TrainConfig(c=0.5, cost_split=(0.4, 0.1)), train_logit),
    ]:
        clf = trainer(ds, pos, neg, cfg)
        back = classifier_from_dict(classifier_to_dict(clf))
        np.testing.assert_allclose(decision(back, probe), decision(clf, probe),
                                   atol=0)
        assert back.config == clf.config
        path = tmp_path / "clf.json"
        save_classifier(clf, path)
        np.testing.assert_allclose(decision(load_classifier(path), probe),
                                   decision(clf, probe), atol=0)


def test_serialization_rejects_unknown_schema():
    rng = np.random.default_rng(17)
    ds, pos, neg = two_class_problem(rng, 4, 6, 3)
    d = classifier_to_dict(train_svm(ds, pos, neg, TrainConfig()))
    d["schema_version"] = 99
    with pytest.raises(ConfigError):
        classifier_from_dict(d)
