"""Scikit-learn compatible wrappers around the functional API.

``CoarseResolution`` is a stateless transformer producing one rung of the
resolution ladder, so it drops into sklearn pipelines.  ``MultiresolutionCNN``
is a classifier whose ``fit`` runs the full coarse-to-fine curriculum; with
``k_levels=1`` it trains conventionally.  Both follow the estimator
contract (``get_params`` / ``set_params`` / ``clone``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .curriculum import plan_phases, train_multiresolution
from .experiment import _auto_spec
from .multires import build_curriculum_dataset, build_resolution
from .nn import NetworkSpec, TrainConfig, init_weights, predict_probabilities
from .validation import check_batch, check_labels


def _dimensionality_of(X: np.ndarray) -> str:
    # feature axes only: (n, L[, C]) is a 1D signal batch, (n, H, W[, C]) 2D
    if X.ndim in (2,):
        return "1D"
    if X.ndim == 3:
        return "1D" if X.shape[2] <= 4 else "2D"
    if X.ndim == 4:
        return "2D"
    raise ValueError(f"cannot infer dimensionality from batch shape {X.shape}")


class CoarseResolution(TransformerMixin, BaseEstimator):
    """Transform samples to resolution version ``index`` (1 = unchanged).

    ``dimensionality`` is inferred from the batch shape by default; pass
    "1D" or "2D" explicitly for ambiguous shapes such as (n, 32, 32).
    """

    def __init__(self, index=1, dimensionality="auto"):
        self.index = index
        self.dimensionality = dimensionality

    def fit(self, X, y=None):
        X = check_batch(X)
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    def transform(self, X):
        X = check_batch(X)
        dim = _dimensionality_of(X) if self.dimensionality == "auto" else self.dimensionality
        return np.stack([build_resolution(X[i], self.index, dim).data for i in range(X.shape[0])])


class MultiresolutionCNN(ClassifierMixin, BaseEstimator):
    """Small CNN classifier trained coarse-to-fine over ``k_levels`` phases.

    Accepts 1D batches (n, length) / (n, length, channels) and 2D batches
    (n, rows, cols) / (n, rows, cols, channels).  ``network_spec`` overrides
    the compact default architecture.  A validation slice is split off
    deterministically for early stopping.
    """

    def __init__(
        self,
        k_levels=1,
        total_epochs=30,
        learning_rate=0.02,
        momentum=0.2,
        weight_decay=0.001,
        batch_size=23,
        early_stop_patience=20,
        validation_fraction=0.16,
        validation_resolution="phase",
        network_spec=None,
        dimensionality="auto",
        random_state=0,
    ):
        self.k_levels = k_levels
        self.total_epochs = total_epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.early_stop_patience = early_stop_patience
        self.validation_fraction = validation_fraction
        self.validation_resolution = validation_resolution
        self.network_spec = network_spec
        self.dimensionality = dimensionality
        self.random_state = random_state

    def _prepare(self, X):
        X = check_batch(X)
        dim = _dimensionality_of(X) if self.dimensionality == "auto" else self.dimensionality
        if dim == "1D" and X.ndim == 2:
            X = X[:, :, None]
        elif dim == "2D" and X.ndim == 3:
            X = X[:, :, :, None]
        return X, dim

    def fit(self, X, y):
        X, dim = self._prepare(X)
        y = check_labels(np.asarray(y), X.shape[0])
        self.classes_, y_encoded = np.unique(y, return_inverse=True)
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        num_classes = len(self.classes_)
        if num_classes < 2:
            raise ValueError("need at least two classes")

        spec = self.network_spec
        if spec is None:
            spec = _auto_spec(tuple(X.shape[1:]), num_classes)
        elif not isinstance(spec, NetworkSpec):
            raise TypeError("network_spec must be a NetworkSpec")

        n_val = max(1, int(round(self.validation_fraction * X.shape[0])))
        order = np.random.default_rng(self.random_state).permutation(X.shape[0])
        val_idx, train_idx = order[:n_val], order[n_val:]
        if train_idx.size < self.batch_size:
            raise ValueError(
                f"batch_size {self.batch_size} exceeds the {train_idx.size}-sample training portion"
            )

        config = TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            max_epochs=self.total_epochs,
            early_stop_patience=self.early_stop_patience,
            seed=self.random_state,
        )
        versions = build_curriculum_dataset(X[train_idx], self.k_levels, dim)
        plan = plan_phases(self.total_epochs, self.k_levels, dim)
        network = init_weights(spec, self.random_state)
        self.network_, self.report_ = train_multiresolution(
            network,
            versions,
            y_encoded[train_idx],
            X[val_idx],
            y_encoded[val_idx],
            plan,
            config,
            dim,
            self.validation_resolution,
        )
        self._dim_ = dim
        return self

    def predict_proba(self, X):
        if not hasattr(self, "network_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        X, _ = self._prepare(X)
        return predict_probabilities(self.network_, X)

    def predict(self, X):
        probabilities = self.predict_proba(X)
        return self.classes_[probabilities.argmax(axis=1)]
