"""Synthetic datasets and deterministic split utilities.

Two built-in generators keep the experiment harness self-contained:

* ``synthetic_wave_dataset`` -- 1D two-class signals: steady sinusoids
  versus upward-sweeping chirps, matched in amplitude, plus Gaussian noise.
  The classes differ in how spectral content evolves over the window, so
  coarse (smoothed) versions remain discriminable.
* ``synthetic_patch_dataset`` -- 2D two-class patches: horizontally versus
  vertically oriented intensity ramps plus noise.

Splits are pure functions of (seed, sample order): the same seed always
yields the same membership.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError


def synthetic_wave_dataset(
    n_samples: int, length: int = 128, seed: int = 0, noise: float = 0.1, nuisance: float = 0.0
):
    """Two-class 1D set: class 0 sinusoid, class 1 chirp.  Returns
    (X, y) with X of shape (n_samples, length, 1).

    ``nuisance`` adds a class-uncorrelated high-frequency tone of that
    amplitude to every sample: a distractor that smoothing removes but that
    full-resolution training is free to latch onto.
    """
    if n_samples < 2:
        raise DataError(f"need at least 2 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, length, endpoint=False)
    X = np.empty((n_samples, length, 1))
    y = (rng.random(n_samples) < 0.5).astype(np.int64)
    for i in range(n_samples):
        base_freq = rng.uniform(2.0, 4.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if y[i] == 0:
            signal = np.sin(2.0 * np.pi * base_freq * t + phase)
        else:
            sweep = rng.uniform(6.0, 10.0)
            signal = np.sin(2.0 * np.pi * (base_freq * t + 0.5 * sweep * t**2) + phase)
        if nuisance:
            high_freq = rng.uniform(length / 5.0, length / 3.0)
            signal = signal + nuisance * np.sin(2.0 * np.pi * high_freq * t + rng.uniform(0, 2 * np.pi))
        X[i, :, 0] = signal + rng.normal(0.0, noise, size=length)
    return X, y


def synthetic_patch_dataset(
    n_samples: int, size: int = 16, channels: int = 1, seed: int = 0, noise: float = 0.1
):
    """Two-class 2D set: class 0 ramps along columns, class 1 along rows.
    Returns (X, y) with X of shape (n_samples, size, size, channels)."""
    if n_samples < 2:
        raise DataError(f"need at least 2 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    ramp = np.linspace(-0.5, 0.5, size)
    X = np.empty((n_samples, size, size, channels))
    y = (rng.random(n_samples) < 0.5).astype(np.int64)
    for i in range(n_samples):
        scale = rng.uniform(0.5, 1.0)
        offset = rng.uniform(-0.2, 0.2)
        base = ramp[None, :] if y[i] == 0 else ramp[:, None]
        patch = scale * np.broadcast_to(base, (size, size)) + offset
        for c in range(channels):
            X[i, :, :, c] = patch + rng.normal(0.0, noise, size=(size, size))
    return X, y


def split_indices(n: int, ratios, seed: int):
    """Shuffle 0..n-1 with ``seed`` and cut into train/validation/test.

    ``ratios`` are three fractions summing to 1 (+/- 1e-9); train and
    validation sizes are floors, the test split takes the remainder.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be three non-negative fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(ratios[0] * n)
    n_val = int(ratios[1] * n)
    return (
        order[:n_train],
        order[n_train : n_train + n_val],
        order[n_train + n_val :],
    )


def reduce_training_indices(train_indices, fraction: float):
    """Keep the leading ``fraction`` of an already shuffled training split;
    validation and test splits are left to the caller untouched."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"training fraction must be in (0, 1], got {fraction}")
    keep = int(len(train_indices) * fraction)
    if keep < 1:
        raise ValueError("training fraction leaves no training samples")
    return train_indices[:keep]


def kfold_combinations(n: int, folds: int, seed: int):
    """All (train, validation, test) index triples for a k-fold regime where
    one fold is held out for testing and one other fold for validation:
    k * (k - 1) combinations."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ValueError(f"cannot cut {n} samples into {folds} folds")
    order = np.random.default_rng(seed).permutation(n)
    chunks = np.array_split(order, folds)
    combos = []
    for test_fold in range(folds):
        for val_fold in range(folds):
            if val_fold == test_fold:
                continue
            train = np.concatenate(
                [chunks[f] for f in range(folds) if f not in (test_fold, val_fold)]
            )
            combos.append((train, chunks[val_fold], chunks[test_fold]))
    return combos
