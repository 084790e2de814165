from __future__ import annotations

import numpy as np
import pytest

from spamboost.dataset import (
    DataFormatError,
    Dataset,
    SplitSpec,
    kfold_indices,
    load_dataset,
    stratified_split,
)

from conftest import make_binary_dataset


class TestDatasetValidation:
    def test_minimal_construction(self) -> None:
        ds = Dataset(features=[[0.1, 0.2]], labels=[1])
        assert ds.n_rows == 1
        assert ds.feature_count == 2
        assert list(ds.row_ids) == [0]

    def test_rejects_non_binary_labels(self) -> None:
        with pytest.raises(ValueError, match="0 or 1"):
            Dataset(features=[[1.0], [2.0]], labels=[0, 2])

    def test_rejects_non_finite_features(self) -> None:
        with pytest.raises(ValueError, match="NaN or infinite"):
            Dataset(features=[[np.nan]], labels=[0])

    def test_rejects_row_count_mismatch(self) -> None:
        with pytest.raises(ValueError, match="mismatch"):
            Dataset(features=[[1.0], [2.0]], labels=[0])

    def test_rejects_duplicate_row_ids(self) -> None:
        with pytest.raises(ValueError, match="unique"):
            Dataset(features=[[1.0], [2.0]], labels=[0, 1], row_ids=[3, 3])

    def test_arrays_are_immutable(self) -> None:
        ds = Dataset(features=[[1.0]], labels=[0])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 2.0


class TestLoadDataset:
    def test_single_line_file(self, tmp_path) -> None:
        path = tmp_path / "tiny.csv"
        path.write_text("0.1,0.2,1\n")
        ds = load_dataset(path, expected_features=2)
        assert ds.n_rows == 1
        assert ds.feature_count == 2
        assert ds.labels[0] == 1

    def test_malformed_field_names_line_number(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("0.1,abc,1\n")
        with pytest.raises(DataFormatError, match="line 1.*'abc'"):
            load_dataset(path)

    def test_wrong_field_count_names_line_number(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,1\n0.1,1\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_dataset(path)

    def test_bad_label_rejected(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,3\n")
        with pytest.raises(DataFormatError, match="label"):
            load_dataset(path)

    def test_non_finite_rejected(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("0.1,nan,1\n")
        with pytest.raises(DataFormatError, match="line 1"):
            load_dataset(path)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(DataFormatError, match="cannot read"):
            load_dataset(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path) -> None:
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="no data rows"):
            load_dataset(path)

    def test_expected_feature_count_enforced(self, tmp_path) -> None:
        path = tmp_path / "tiny.csv"
        path.write_text("0.1,0.2,1\n")
        with pytest.raises(DataFormatError, match="line 1"):
            load_dataset(path, expected_features=5)

    def test_row_order_preserved(self, tmp_path) -> None:
        path = tmp_path / "rows.csv"
        path.write_text("1.0,0\n2.0,1\n3.0,0\n")
        ds = load_dataset(path)
        assert list(ds.features[:, 0]) == [1.0, 2.0, 3.0]
        assert list(ds.labels) == [0, 1, 0]


class TestSplitSpec:
    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_must_be_interior(self, fraction) -> None:
        with pytest.raises(ValueError):
            SplitSpec(test_fraction=fraction, seed=0)


class TestStratifiedSplit:
    def test_half_to_even_quota_on_five_per_class(self) -> None:
        # round-half-to-even(0.5 * 5) = 2 per class, so 4 test rows total.
        X = np.arange(10, dtype=float).reshape(10, 1)
        y = np.array([0, 1] * 5)
        ds = Dataset(features=X, labels=y)
        for seed in (0, 1, 99):
            train, test = stratified_split(ds, SplitSpec(0.5, seed))
            assert test.n_rows == 4
            assert test.class_counts() == {0: 2, 1: 2}
            assert train.n_rows == 6

    @pytest.mark.parametrize(
        "count,fraction,quota",
        [(5, 0.5, 2), (6, 0.25, 2), (2, 0.25, 0), (1813, 0.3, 544), (2788, 0.3, 836)],
    )
    def test_quota_rule_cases(self, count, fraction, quota) -> None:
        assert round(fraction * count) == quota

    def test_partition_property(self) -> None:
        for seed in range(5):
            ds = make_binary_dataset(n=87, p=3, seed=seed)
            train, test = stratified_split(ds, SplitSpec(0.3, seed))
            train_ids = set(train.row_ids.tolist())
            test_ids = set(test.row_ids.tolist())
            assert train_ids.isdisjoint(test_ids)
            assert train_ids | test_ids == set(ds.row_ids.tolist())

    def test_stratification_property(self) -> None:
        ds = make_binary_dataset(n=101, p=2, seed=3)
        counts = ds.class_counts()
        for fraction in (0.2, 0.3, 0.5):
            _, test = stratified_split(ds, SplitSpec(fraction, seed=11))
            for c in (0, 1):
                assert test.class_counts()[c] == round(fraction * counts[c])

    def test_deterministic_for_fixed_seed(self) -> None:
        ds = make_binary_dataset(n=60, p=2, seed=1)
        a = stratified_split(ds, SplitSpec(0.3, 7))
        b = stratified_split(ds, SplitSpec(0.3, 7))
        for x, y in zip(a, b):
            assert (x.row_ids == y.row_ids).all()
            assert (x.features == y.features).all()

    def test_different_seeds_same_counts(self) -> None:
        ds = make_binary_dataset(n=200, p=2, seed=2)
        _, t1 = stratified_split(ds, SplitSpec(0.3, 1))
        _, t2 = stratified_split(ds, SplitSpec(0.3, 2))
        assert t1.class_counts() == t2.class_counts()
        assert set(t1.row_ids.tolist()) != set(t2.row_ids.tolist())

    def test_requires_two_rows_per_class(self) -> None:
        ds = Dataset(features=[[1.0], [2.0], [3.0]], labels=[0, 0, 1])
        with pytest.raises(ValueError, match="class 1"):
            stratified_split(ds, SplitSpec(0.5, 0))

    def test_row_ids_survive_splitting(self) -> None:
        ds = make_binary_dataset(n=40, p=2, seed=5)
        train, test = stratified_split(ds, SplitSpec(0.25, 3))
        for part in (train, test):
            for rid in part.row_ids:
                pos = int(np.flatnonzero(ds.row_ids == rid)[0])
                sub = part.take_row_ids([rid])
                assert (sub.features[0] == ds.features[pos]).all()


class TestKFold:
    def test_valid_sets_partition_row_ids(self) -> None:
        for seed in range(4):
            ds = make_binary_dataset(n=53, p=2, seed=seed)
            folds = kfold_indices(ds, 5, seed)
            seen: list[int] = []
            for _, valid_ids in folds:
                seen.extend(valid_ids.tolist())
            assert sorted(seen) == sorted(ds.row_ids.tolist())

    def test_fold_sizes_per_class_balanced(self) -> None:
        ds = make_binary_dataset(n=47, p=2, seed=9)
        labels_by_id = dict(zip(ds.row_ids.tolist(), ds.labels.tolist()))
        for c in (0, 1):
            sizes = []
            for _, valid_ids in kfold_indices(ds, 4, seed=2):
                sizes.append(sum(1 for rid in valid_ids if labels_by_id[rid] == c))
            assert max(sizes) - min(sizes) <= 1

    def test_two_folds_on_four_balanced_rows(self) -> None:
        ds = Dataset(features=[[1.0], [2.0], [3.0], [4.0]], labels=[0, 0, 1, 1])
        folds = kfold_indices(ds, 2, seed=0)
        labels_by_id = dict(zip(ds.row_ids.tolist(), ds.labels.tolist()))
        for _, valid_ids in folds:
            got = sorted(labels_by_id[rid] for rid in valid_ids)
            assert got == [0, 1]

    def test_leave_one_out(self) -> None:
        ds = make_binary_dataset(n=12, p=2, seed=4)
        folds = kfold_indices(ds, 12, seed=1)
        assert len(folds) == 12
        assert all(len(valid_ids) == 1 for _, valid_ids in folds)

    def test_train_valid_disjoint_and_complete(self) -> None:
        ds = make_binary_dataset(n=30, p=2, seed=8)
        for train_ids, valid_ids in kfold_indices(ds, 3, seed=5):
            t, v = set(train_ids.tolist()), set(valid_ids.tolist())
            assert t.isdisjoint(v)
            assert t | v == set(ds.row_ids.tolist())

    @pytest.mark.parametrize("k", [0, 1, 99])
    def test_k_bounds(self, k) -> None:
        ds = make_binary_dataset(n=20, p=2, seed=0)
        with pytest.raises(ValueError, match="k must"):
            kfold_indices(ds, k, seed=0)

    def test_deterministic(self) -> None:
        ds = make_binary_dataset(n=25, p=2, seed=6)
        a = kfold_indices(ds, 5, seed=3)
        b = kfold_indices(ds, 5, seed=3)
        for (ta, va), (tb, vb) in zip(a, b):
            assert (ta == tb).all()
            assert (va == vb).all()
