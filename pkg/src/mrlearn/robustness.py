"""Robustness evaluation harness.

Four perturbation families against a trained network, plus aggregation:

* impulsive Gaussian noise at a fixed density of positions;
* an iterative minimal-L2 misclassification search (gradient-based
  linearisation toward the nearest class boundary), with the summary
  statistic rho = mean ||perturbation|| / ||input|| over a test set;
* a black-box single-pixel search driven by differential evolution;
* a subband-swap attack that grafts one detail band (LH, HL or HH) of a
  single-level 2D Haar decomposition from a donor image of another class.

Every attack is deterministic under a fixed seed.  Attacks on distinct
samples are independent; callers may parallelise by deriving one seed per
sample.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .nn import Network, forward, input_gradient_for_logit, predict_probabilities
from .validation import as_float_array
from .wavelet import SubbandTriple, WaveletPyramid2D, dwt2d, idwt2d

SWAP_BANDS = ("LH", "HL", "HH")


@dataclass(frozen=True)
class Perturbation:
    """Outcome of one attack on one sample."""

    delta: np.ndarray
    l2_norm: float
    iterations_used: int
    success: bool

    @staticmethod
    def from_delta(delta, iterations_used, success):
        delta = np.asarray(delta, dtype=np.float64)
        return Perturbation(
            delta=delta,
            l2_norm=float(np.sqrt((delta**2).sum())),
            iterations_used=int(iterations_used),
            success=bool(success),
        )


@dataclass
class RobustnessReport:
    """Aggregate of a minimal-perturbation sweep over a test set.

    ``rho`` averages ||perturbation|| / ||input|| over samples where the
    attack flipped the prediction; failures and zero-norm inputs are counted
    separately rather than folded into the mean.
    """

    rho: float
    per_sample_ratios: list
    attack_success_rate: float
    sample_count: int
    seed: int
    skipped_zero_norm: int = 0
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "attack_success_rate": self.attack_success_rate,
            "sample_count": self.sample_count,
            "skipped_zero_norm": self.skipped_zero_norm,
            "seed": self.seed,
            "per_sample_ratios": list(self.per_sample_ratios),
        }

    def to_csv(self) -> str:
        """One row per attacked sample: id, label, predicted, success,
        l2_norm, ratio."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "label", "predicted", "success", "l2_norm", "ratio"])
        for row in self.records:
            writer.writerow(
                [
                    row["id"],
                    row["label"],
                    row["predicted"],
                    int(row["success"]),
                    f"{row['l2_norm']:.12g}",
                    f"{row['ratio']:.12g}" if row["ratio"] is not None else "",
                ]
            )
        return buf.getvalue()


def add_impulsive_noise(signal, density: float, sigma: float, seed) -> np.ndarray:
    """Add Normal(0, sigma) noise at floor(density * n) positions chosen
    uniformly without replacement; the rest of the signal is untouched.

    ``seed`` is anything ``numpy.random.default_rng`` accepts (an int, or a
    tuple for derived per-sample streams).
    """
    x = as_float_array(signal, "signal").copy()
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    flat = x.reshape(-1)
    count = int(density * flat.shape[0])
    rng = np.random.default_rng(seed)
    positions = rng.choice(flat.shape[0], size=count, replace=False)
    flat[positions] += rng.normal(0.0, sigma, size=count)
    return x


def noisy_accuracy(network: Network, X, y, density: float, sigma: float, seed: int) -> float:
    """Accuracy after perturbing every test sample with impulsive noise;
    each sample gets its own stream derived from (seed, index)."""
    X = as_float_array(X, "X")
    noisy = np.stack(
        [add_impulsive_noise(X[i], density, sigma, seed=(seed, i)) for i in range(X.shape[0])]
    )
    probs = predict_probabilities(network, noisy)
    return float((probs.argmax(axis=1) == np.asarray(y)).mean())


# ---------------------------------------------------------------------------
# minimal-perturbation search


def deepfool(
    network: Network,
    x,
    max_iter: int = 50,
    overshoot: float = 0.02,
    relu_slope: float = 1.0,
) -> Perturbation:
    """Estimate the smallest L2 perturbation that flips the prediction.

    Iteratively linearises the classifier at the current point, steps to the
    nearest linearised class boundary, and stops once the label changes.
    The returned delta includes the (1 + overshoot) factor that pushes the
    point just past the boundary; ``success`` reports whether the label
    actually flipped within ``max_iter`` iterations.
    """
    x = as_float_array(x, "x")
    sample = x[None, ...]
    state = forward(network, sample, "eval", relu_slope)
    original_label = int(state.probabilities[0].argmax())
    num_classes = state.logits.shape[1]

    r_total = np.zeros_like(x)
    iterations = 0
    success = False
    jittered = False
    while iterations < max_iter:
        current = sample + (1.0 + overshoot) * r_total[None, ...]
        state = forward(network, current, "eval", relu_slope)
        label_now = int(state.probabilities[0].argmax())
        if label_now != original_label:
            success = True
            break
        logits = state.logits[0]
        grads = np.stack(
            [input_gradient_for_logit(network, state, k)[0] for k in range(num_classes)]
        )
        best_step = None
        best_distance = np.inf
        for k in range(num_classes):
            if k == original_label:
                continue
            w_k = grads[k] - grads[original_label]
            f_k = logits[k] - logits[original_label]
            norm = float(np.sqrt((w_k**2).sum()))
            if norm < 1e-12:
                continue
            distance = abs(f_k) / norm
            if distance < best_distance:
                best_distance = distance
                best_step = (abs(f_k) + 1e-12) / norm**2 * w_k
        if best_step is None:
            if not jittered:
                # non-differentiable / degenerate point: nudge and retry once
                jitter_rng = np.random.default_rng(0)
                sample = sample + jitter_rng.normal(0.0, 1e-9, size=sample.shape)
                jittered = True
                continue
            raise RuntimeError(
                "all class boundary directions are degenerate (zero gradient); "
                f"label={original_label}, logits={logits.tolist()}"
            )
        r_total = r_total + best_step
        iterations += 1

    delta = (1.0 + overshoot) * r_total
    return Perturbation.from_delta(delta, iterations, success)


def robustness_rho(
    network: Network,
    test_set,
    max_iter: int = 50,
    overshoot: float = 0.02,
    relu_slope: float = 1.0,
    labels=None,
    seed: int = 0,
) -> RobustnessReport:
    """Run the minimal-perturbation search over a test set and average the
    perturbation-to-input norm ratios (successful attacks only)."""
    X = as_float_array(test_set, "test_set")
    if X.shape[0] == 0:
        raise ValueError("test set is empty")
    ratios = []
    records = []
    skipped = 0
    successes = 0
    attempted = 0
    for i in range(X.shape[0]):
        x = X[i]
        x_norm = float(np.sqrt((x**2).sum()))
        label = int(labels[i]) if labels is not None else -1
        if x_norm == 0.0:
            warnings.warn(f"sample {i} has zero norm; skipped from the norm-ratio average")
            skipped += 1
            records.append(
                {"id": i, "label": label, "predicted": -1, "success": False, "l2_norm": 0.0, "ratio": None}
            )
            continue
        attempted += 1
        pert = deepfool(network, x, max_iter, overshoot, relu_slope)
        predicted = int(predict_probabilities(network, (x + pert.delta)[None, ...])[0].argmax())
        ratio = pert.l2_norm / x_norm if pert.success else None
        if pert.success:
            successes += 1
            ratios.append(ratio)
        records.append(
            {
                "id": i,
                "label": label,
                "predicted": predicted,
                "success": pert.success,
                "l2_norm": pert.l2_norm,
                "ratio": ratio,
            }
        )
    rho = float(np.mean(ratios)) if ratios else float("nan")
    return RobustnessReport(
        rho=rho,
        per_sample_ratios=ratios,
        attack_success_rate=successes / attempted if attempted else 0.0,
        sample_count=int(X.shape[0]),
        seed=seed,
        skipped_zero_norm=skipped,
        records=records,
    )


# ---------------------------------------------------------------------------
# single-pixel differential evolution


def _apply_pixel(image, candidate):
    out = image.copy()
    rows, cols = image.shape[0], image.shape[1]
    r = int(np.clip(np.rint(candidate[0]), 0, rows - 1))
    c = int(np.clip(np.rint(candidate[1]), 0, cols - 1))
    if image.ndim == 2:
        out[r, c] = candidate[2]
    else:
        out[r, c, :] = candidate[2:]
    return out


def one_pixel_attack(
    network: Network,
    image,
    pop_size: int = 75,
    max_gens: int = 40,
    seed: int = 0,
    scale_factor: float = 0.5,
    value_bounds=None,
    relu_slope: float = 1.0,
) -> Perturbation:
    """Black-box attack that perturbs exactly one pixel.

    Differential evolution (rand/1, no crossover) over candidate vectors
    (row, col, value per channel); fitness is the probability assigned to
    the currently predicted class, minimised.  Stops as soon as any
    candidate flips the prediction.  Candidate values are clipped to
    ``value_bounds`` (defaults to the image's own min/max).
    """
    x = as_float_array(image, "image")
    if x.ndim not in (2, 3):
        raise DimensionError(f"image must be 2D or 2D+channels, got shape {x.shape}")
    channels = 1 if x.ndim == 2 else x.shape[2]
    rows, cols = x.shape[0], x.shape[1]
    if value_bounds is None:
        value_bounds = (float(x.min()), float(x.max()))
    lo = np.array([0.0, 0.0] + [value_bounds[0]] * channels)
    hi = np.array([rows - 1.0, cols - 1.0] + [value_bounds[1]] * channels)

    true_class = int(predict_probabilities(network, x[None, ...], relu_slope)[0].argmax())
    rng = np.random.default_rng(seed)

    def evaluate_population(candidates):
        batch = np.stack([_apply_pixel(x, cand) for cand in candidates])
        probs = predict_probabilities(network, batch, relu_slope)
        return probs[:, true_class], probs.argmax(axis=1)

    population = rng.uniform(lo, hi, size=(pop_size, lo.shape[0]))
    fitness, predictions = evaluate_population(population)

    def check_success(generation):
        flipped = np.flatnonzero(predictions != true_class)
        if flipped.size:
            best = flipped[np.argmin(fitness[flipped])]
            adv = _apply_pixel(x, population[best])
            return Perturbation.from_delta(adv - x, generation, True)
        return None

    result = check_success(0)
    generation = 0
    while result is None and generation < max_gens:
        generation += 1
        for i in range(pop_size):
            choices = rng.choice(pop_size - 1, size=3, replace=False)
            choices[choices >= i] += 1  # distinct indices, none equal to i
            a, b, c = population[choices]
            trial = np.clip(a + scale_factor * (b - c), lo, hi)
            trial_fit, trial_pred = evaluate_population(trial[None, :])
            if trial_fit[0] <= fitness[i]:
                population[i] = trial
                fitness[i] = trial_fit[0]
                predictions[i] = trial_pred[0]
        result = check_success(generation)
    if result is not None:
        return result
    best = int(np.argmin(fitness))
    adv = _apply_pixel(x, population[best])
    flipped = int(predict_probabilities(network, adv[None, ...], relu_slope)[0].argmax()) != true_class
    return Perturbation.from_delta(adv - x, generation, flipped)


# ---------------------------------------------------------------------------
# subband swap


def _swap_band_single(x, donor, band):
    pyr_x = dwt2d(x, 1)
    pyr_d = dwt2d(donor, 1)
    t_x, t_d = pyr_x.details[0], pyr_d.details[0]
    bands = {
        "LH": SubbandTriple(lh=t_d.lh, hl=t_x.hl, hh=t_x.hh),
        "HL": SubbandTriple(lh=t_x.lh, hl=t_d.hl, hh=t_x.hh),
        "HH": SubbandTriple(lh=t_x.lh, hl=t_x.hl, hh=t_d.hh),
    }[band]
    return idwt2d(WaveletPyramid2D(pyr_x.approx, (bands,), pyr_x.original_shape, 1))


def multires_swap_attack(x, donor, band: str = "random", seed: int = 0) -> np.ndarray:
    """Replace one detail band of ``x`` with the same band from ``donor``.

    Both images are decomposed one Haar level; the chosen band (LH, HL, HH,
    or one picked at random under ``seed``) is grafted from the donor and
    the result reconstructed.  The approximation and the two remaining bands
    of ``x`` are untouched.  Multichannel images share one band choice,
    applied per channel.
    """
    x = as_float_array(x, "x")
    donor = as_float_array(donor, "donor")
    if x.shape != donor.shape:
        raise DimensionError(f"donor shape {donor.shape} does not match input shape {x.shape}")
    if band == "random":
        band = SWAP_BANDS[np.random.default_rng(seed).integers(0, 3)]
    if band not in SWAP_BANDS:
        raise ValueError(f"band must be one of {SWAP_BANDS} or 'random', got {band!r}")
    if x.ndim == 2:
        return _swap_band_single(x, donor, band)
    if x.ndim == 3:
        out = np.empty_like(x)
        for c in range(x.shape[2]):
            out[..., c] = _swap_band_single(x[..., c], donor[..., c], band)
        return out
    raise DimensionError(f"x must be 2D or 2D+channels, got shape {x.shape}")


def attack_success_rate(attack_results) -> float:
    """Fraction of attacks that flipped an originally-correct prediction.

    Accepts :class:`Perturbation` objects or plain booleans.
    """
    results = list(attack_results)
    if not results:
        raise ValueError("no attack results to aggregate")
    successes = sum(
        bool(r.success) if isinstance(r, Perturbation) else bool(r) for r in results
    )
    return successes / len(results)


def swap_attack_success_table(per_band_results: dict) -> list:
    """Rows (band, count, success_rate) for LH, HL, HH plus a Total row."""
    rows = []
    total_n = 0
    total_success = 0
    for band in SWAP_BANDS:
        results = per_band_results.get(band, [])
        n = len(results)
        successes = sum(
            bool(r.success) if isinstance(r, Perturbation) else bool(r) for r in results
        )
        rows.append((band, n, successes / n if n else 0.0))
        total_n += n
        total_success += successes
    rows.append(("Total", total_n, total_success / total_n if total_n else 0.0))
    return rows
