import numpy as np
import numpy.testing as npt
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from mrlearn.estimators import CoarseResolution, MultiresolutionCNN
from mrlearn.multires import build_resolution_1d, build_resolution_2d


def separable_1d(n=80, length=16, seed=0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(int)
    X = rng.normal(scale=0.3, size=(n, length)) + np.where(y, 1.0, -1.0)[:, None]
    return X, y


class TestCoarseResolution:
    def test_matches_functional_api_1d(self):
        X, _ = separable_1d()
        out = CoarseResolution(index=3).fit_transform(X)
        for i in range(4):
            npt.assert_allclose(out[i], build_resolution_1d(X[i], 3).data, atol=1e-12)

    def test_matches_functional_api_2d(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(5, 8, 8, 1))
        out = CoarseResolution(index=3).fit_transform(X)
        npt.assert_allclose(out[0], build_resolution_2d(X[0], 3).data, atol=1e-12)

    def test_index_one_is_identity(self):
        X, _ = separable_1d(n=6)
        npt.assert_array_equal(CoarseResolution(index=1).fit_transform(X), X)

    def test_get_params_round_trip(self):
        t = CoarseResolution(index=2, dimensionality="1D")
        params = t.get_params()
        assert params == {"index": 2, "dimensionality": "1D"}
        assert clone(t).get_params() == params

    def test_works_in_pipeline(self):
        X, y = separable_1d()
        pipe = make_pipeline(
            CoarseResolution(index=2),
            MultiresolutionCNN(k_levels=1, total_epochs=5, batch_size=16,
                               learning_rate=0.1, random_state=0),
        )
        pipe.fit(X, y)
        assert pipe.score(X, y) > 0.8


class TestMultiresolutionCNN:
    def test_fit_predict_1d(self):
        X, y = separable_1d()
        clf = MultiresolutionCNN(k_levels=2, total_epochs=8, batch_size=16,
                                 learning_rate=0.1, random_state=0)
        clf.fit(X, y)
        preds = clf.predict(X)
        assert preds.shape == (80,)
        assert clf.score(X, y) > 0.9
        probs = clf.predict_proba(X)
        npt.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_classes_preserved_with_noncontiguous_labels(self):
        X, y01 = separable_1d()
        y = np.where(y01 == 0, 3, 7)
        clf = MultiresolutionCNN(k_levels=1, total_epochs=5, batch_size=16,
                                 learning_rate=0.1, random_state=0)
        clf.fit(X, y)
        assert set(np.unique(clf.predict(X))) <= {3, 7}
        npt.assert_array_equal(clf.classes_, [3, 7])

    def test_deterministic_per_random_state(self):
        X, y = separable_1d()
        a = MultiresolutionCNN(k_levels=2, total_epochs=4, batch_size=16, random_state=5).fit(X, y)
        b = MultiresolutionCNN(k_levels=2, total_epochs=4, batch_size=16, random_state=5).fit(X, y)
        assert a.network_.param_digest() == b.network_.param_digest()

    def test_2d_input(self):
        rng = np.random.default_rng(2)
        y = (rng.random(60) < 0.5).astype(int)
        ramp = np.linspace(-1, 1, 12)
        X = np.where(y[:, None, None] == 0, ramp[None, None, :], ramp[None, :, None])
        X = X + rng.normal(scale=0.05, size=(60, 12, 12))
        clf = MultiresolutionCNN(k_levels=3, total_epochs=9, batch_size=16,
                                 learning_rate=0.1, random_state=1)
        clf.fit(X, y)
        assert clf.score(X, y) > 0.8

    def test_predict_before_fit_raises(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            MultiresolutionCNN().predict(np.zeros((2, 8)))

    def test_sklearn_clone(self):
        clf = MultiresolutionCNN(k_levels=3, total_epochs=12)
        cloned = clone(clf)
        assert cloned.get_params()["k_levels"] == 3
        assert cloned.get_params()["total_epochs"] == 12
