from __future__ import annotations

import numpy as np
import pytest

from spamboost.booster import (
    Hyperparams,
    Leaf,
    Model,
    Split,
    model_to_text,
    predict_label,
    predict_proba,
    predict_raw,
    train,
)
from spamboost.dataset import Dataset

from conftest import make_binary_dataset


def traverse(node, x):
    """Test-local single-row tree walk, independent of the vectorized router."""
    while isinstance(node, Split):
        node = node.left if x[node.feature] < node.threshold else node.right
    return node.weight


def logloss(y, raw):
    p = 1.0 / (1.0 + np.exp(-raw))
    eps = 1e-300
    return float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))


def separable_dataset() -> Dataset:
    x = np.concatenate([np.linspace(0, 1, 10), np.linspace(2, 3, 10)])
    y = np.array([0] * 10 + [1] * 10)
    return Dataset(features=x.reshape(-1, 1), labels=y)


class TestTrain:
    def test_single_positive_row(self) -> None:
        ds = Dataset(features=[[1.0]], labels=[1])
        params = Hyperparams(num_rounds=5, min_child_weight=0.0)
        model = train(ds, params, seed=0)
        assert predict_proba(model, ds.features)[0] > 0.5

    def test_separable_data_reaches_zero_error(self) -> None:
        ds = separable_dataset()
        params = Hyperparams(
            num_rounds=50, max_depth=2, colsample=1.0, min_child_weight=0.0
        )
        model = train(ds, params, seed=1)
        assert 0.0 in model.training_log[:50]
        predicted = predict_label(model, ds.features)
        assert (predicted == ds.labels).all()

    def test_empty_dataset_rejected(self) -> None:
        ds = Dataset(features=np.empty((0, 2)), labels=np.empty(0, dtype=int))
        with pytest.raises(ValueError, match="empty"):
            train(ds, Hyperparams(), seed=0)

    def test_single_class_converges_to_constant(self) -> None:
        ds = Dataset(features=np.arange(8, dtype=float).reshape(-1, 1), labels=[0] * 8)
        model = train(ds, Hyperparams(num_rounds=10, min_child_weight=0.0), seed=0)
        assert (predict_proba(model, ds.features) < 0.5).all()

    def test_deterministic_for_fixed_seed(self) -> None:
        ds = make_binary_dataset(n=120, p=5, seed=4)
        params = Hyperparams(num_rounds=15, max_depth=3, colsample=0.6, subsample=0.8)
        a = train(ds, params, seed=9)
        b = train(ds, params, seed=9)
        assert model_to_text(a) == model_to_text(b)

    def test_different_seed_changes_sampling(self) -> None:
        ds = make_binary_dataset(n=120, p=5, seed=4)
        params = Hyperparams(num_rounds=10, max_depth=3, colsample=0.5, subsample=0.7)
        a = train(ds, params, seed=1)
        b = train(ds, params, seed=2)
        assert model_to_text(a) != model_to_text(b)

    def test_training_loss_monotone_without_sampling(self) -> None:
        # With full rows/columns and eta <= 1 the logistic loss (not the
        # error rate) must not increase from one round to the next.
        ds = make_binary_dataset(n=150, p=4, seed=7, noise=1.0)
        for eta in (0.1, 0.4, 1.0):
            params = Hyperparams(
                eta=eta,
                num_rounds=25,
                max_depth=3,
                colsample=1.0,
                subsample=1.0,
                early_stopping_rounds=None,
            )
            model = train(ds, params, seed=0)
            raw = np.full(ds.n_rows, model.base_raw)
            losses = [logloss(ds.labels, raw)]
            idx = np.arange(ds.n_rows)
            for tree in model.trees:
                tree.predict_into(ds.features, idx, raw)
                losses.append(logloss(ds.labels, raw))
            diffs = np.diff(losses)
            assert (diffs <= 1e-12).all(), f"loss increased at eta={eta}: {diffs.max()}"

    def test_early_stopping_keeps_best_round(self) -> None:
        ds = make_binary_dataset(n=80, p=3, seed=3, noise=2.5)
        params = Hyperparams(
            num_rounds=60, max_depth=2, colsample=1.0, early_stopping_rounds=5
        )
        model = train(ds, params, seed=2)
        log = np.array(model.training_log)
        best_round = int(np.argmin(log))  # first occurrence of the minimum
        assert len(model.trees) == best_round + 1
        assert len(model.training_log) <= params.num_rounds

    def test_no_early_stopping_keeps_all_rounds(self) -> None:
        ds = make_binary_dataset(n=60, p=3, seed=3)
        params = Hyperparams(num_rounds=12, max_depth=2, early_stopping_rounds=None)
        model = train(ds, params, seed=2)
        assert len(model.trees) == 12
        assert len(model.training_log) == 12

    def test_validation_monitoring_stops_on_holdout(self) -> None:
        ds = make_binary_dataset(n=200, p=4, seed=6, noise=2.0)
        valid = make_binary_dataset(n=80, p=4, seed=60, noise=2.0)
        params = Hyperparams(num_rounds=80, max_depth=3, early_stopping_rounds=4)
        model = train(ds, params, seed=0, valid_ds=valid)
        # Kept length is driven by the validation error, recomputed here.
        raw = np.full(valid.n_rows, model.base_raw)
        idx = np.arange(valid.n_rows)
        errors = []
        for tree in model.trees:
            tree.predict_into(valid.features, idx, raw)
            errors.append(float(((raw >= 0).astype(int) != valid.labels).mean()))
        assert len(model.trees) == int(np.argmin(errors)) + 1

    def test_validation_feature_mismatch(self) -> None:
        ds = make_binary_dataset(n=40, p=3, seed=1)
        valid = make_binary_dataset(n=20, p=2, seed=2)
        with pytest.raises(ValueError, match="feature count"):
            train(ds, Hyperparams(num_rounds=2), seed=0, valid_ds=valid)


class TestPredict:
    def test_zero_tree_model_returns_base(self) -> None:
        model = Model(trees=[], hyperparams=Hyperparams(), base_raw=0.0, feature_count=2)
        X = np.zeros((3, 2))
        assert (predict_raw(model, X) == 0.0).all()
        assert (predict_proba(model, X) == 0.5).all()

    def test_single_leaf_tree_shifts_base(self) -> None:
        from spamboost.booster import Tree

        model = Model(
            trees=[Tree(root=Leaf(weight=0.7, g_sum=0.0, h_sum=0.0))],
            hyperparams=Hyperparams(),
            base_raw=-0.2,
            feature_count=1,
        )
        out = predict_raw(model, np.zeros((4, 1)))
        assert out == pytest.approx(np.full(4, 0.5))

    def test_additive_accumulation_matches_per_tree_walk(self) -> None:
        ds = make_binary_dataset(n=90, p=4, seed=5)
        params = Hyperparams(num_rounds=12, max_depth=3, colsample=1.0)
        model = train(ds, params, seed=1)
        X = make_binary_dataset(n=30, p=4, seed=55).features
        expected = np.full(len(X), model.base_raw)
        for tree in model.trees:
            expected += np.array([traverse(tree.root, x) for x in X])
        assert predict_raw(model, X) == pytest.approx(expected, abs=1e-12)

    def test_prefix_additivity(self) -> None:
        ds = make_binary_dataset(n=90, p=4, seed=5)
        model = train(ds, Hyperparams(num_rounds=8, max_depth=2), seed=1)
        X = ds.features[:13]
        for t in range(1, len(model.trees) + 1):
            head = Model(
                trees=model.trees[:t],
                hyperparams=model.hyperparams,
                base_raw=model.base_raw,
                feature_count=model.feature_count,
            )
            prev = Model(
                trees=model.trees[: t - 1],
                hyperparams=model.hyperparams,
                base_raw=model.base_raw,
                feature_count=model.feature_count,
            )
            delta = predict_raw(head, X) - predict_raw(prev, X)
            walked = np.array([traverse(model.trees[t - 1].root, x) for x in X])
            assert delta == pytest.approx(walked, abs=1e-12)

    def test_dimension_mismatch(self) -> None:
        ds = make_binary_dataset(n=30, p=3, seed=0)
        model = train(ds, Hyperparams(num_rounds=2), seed=0)
        with pytest.raises(ValueError, match="columns"):
            predict_raw(model, np.zeros((4, 5)))

    def test_boundary_probability_classified_positive(self) -> None:
        model = Model(trees=[], hyperparams=Hyperparams(), base_raw=0.0, feature_count=1)
        assert predict_label(model, np.zeros((1, 1)), threshold=0.5)[0] == 1

    def test_threshold_validation(self) -> None:
        model = Model(trees=[], hyperparams=Hyperparams(), base_raw=0.0, feature_count=1)
        with pytest.raises(ValueError, match="threshold"):
            predict_label(model, np.zeros((1, 1)), threshold=1.5)

    def test_labels_consistent_with_threshold(self) -> None:
        ds = make_binary_dataset(n=70, p=3, seed=8)
        model = train(ds, Hyperparams(num_rounds=6, max_depth=2), seed=3)
        proba = predict_proba(model, ds.features)
        for threshold in (0.1, 0.5, 0.9):
            labels = predict_label(model, ds.features, threshold=threshold)
            assert ((proba >= threshold).astype(int) == labels).all()
