import numpy as np
import numpy.testing as npt
import pytest

from mrlearn.datasets import (
    kfold_combinations,
    reduce_training_indices,
    split_indices,
    synthetic_patch_dataset,
    synthetic_wave_dataset,
)


class TestSyntheticGenerators:
    def test_wave_shapes_and_determinism(self):
        X, y = synthetic_wave_dataset(20, length=64, seed=3)
        assert X.shape == (20, 64, 1)
        assert set(np.unique(y)) <= {0, 1}
        X2, y2 = synthetic_wave_dataset(20, length=64, seed=3)
        npt.assert_array_equal(X, X2)
        npt.assert_array_equal(y, y2)

    def test_wave_classes_differ(self):
        X, y = synthetic_wave_dataset(200, length=128, seed=0, noise=0.0)
        assert 0.3 < y.mean() < 0.7  # both classes appear

    def test_patch_shapes(self):
        X, y = synthetic_patch_dataset(10, size=12, channels=3, seed=1)
        assert X.shape == (10, 12, 12, 3)

    def test_patch_orientation(self):
        X, y = synthetic_patch_dataset(40, size=16, seed=2, noise=0.0)
        for i in range(40):
            row_var = X[i, :, :, 0].mean(axis=0).var()  # variation along columns
            col_var = X[i, :, :, 0].mean(axis=1).var()  # variation along rows
            if y[i] == 0:
                assert row_var > col_var
            else:
                assert col_var > row_var


class TestSplits:
    def test_sizes_64_16_20(self):
        tr, va, te = split_indices(3000, (0.64, 0.16, 0.20), seed=0)
        assert (len(tr), len(va), len(te)) == (1920, 480, 600)

    def test_partition_is_disjoint_and_complete(self):
        tr, va, te = split_indices(101, (0.5, 0.25, 0.25), seed=5)
        merged = np.concatenate([tr, va, te])
        assert sorted(merged.tolist()) == list(range(101))

    def test_same_seed_same_membership(self):
        a = split_indices(500, (0.64, 0.16, 0.20), seed=9)
        b = split_indices(500, (0.64, 0.16, 0.20), seed=9)
        for x, y in zip(a, b):
            npt.assert_array_equal(x, y)

    def test_ratio_validation(self):
        with pytest.raises(ValueError):
            split_indices(10, (0.5, 0.2, 0.2), seed=0)

    def test_training_reduction(self):
        tr, va, te = split_indices(3000, (0.64, 0.16, 0.20), seed=0)
        reduced = reduce_training_indices(tr, 0.20)
        assert len(reduced) == 384
        npt.assert_array_equal(reduced, tr[:384])
        assert len(va) == 480 and len(te) == 600  # untouched

    def test_reduction_bounds(self):
        with pytest.raises(ValueError):
            reduce_training_indices(np.arange(10), 0.0)


class TestKfold:
    def test_five_folds_give_twenty_combinations(self):
        combos = kfold_combinations(100, 5, seed=1)
        assert len(combos) == 20

    def test_each_combo_partitions_everything(self):
        for tr, va, te in kfold_combinations(50, 5, seed=2):
            merged = np.concatenate([tr, va, te])
            assert sorted(merged.tolist()) == list(range(50))
            assert len(set(va.tolist()) & set(te.tolist())) == 0

    def test_deterministic(self):
        a = kfold_combinations(30, 3, seed=4)
        b = kfold_combinations(30, 3, seed=4)
        for (t1, v1, e1), (t2, v2, e2) in zip(a, b):
            npt.assert_array_equal(t1, t2)
            npt.assert_array_equal(v1, v2)
            npt.assert_array_equal(e1, e2)
