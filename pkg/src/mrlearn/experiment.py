"""Experiment orchestration: config files, dataset assembly, batch runs.

A single JSON config file describes the dataset, network, curriculum,
optimiser, seeds and attack suite.  Unknown keys anywhere in the file are
hard errors so hyperparameter typos cannot pass silently.  ``run_experiment``
executes every (mode, seed) combination, writes per-run and aggregate
reports under the output directory, and is a pure function of the config
and dataset bytes: metric files are byte-identical across reruns.

Wall-clock timings are written to separate ``timing.json`` files so the
metric files stay deterministic.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curriculum import plan_phases, train_multiresolution
from .dataio import read_image_batch, read_image_directory, read_wav_directory
from .datasets import (
    kfold_combinations,
    reduce_training_indices,
    split_indices,
    synthetic_patch_dataset,
    synthetic_wave_dataset,
)
from .errors import ConfigError, DataError
from .multires import build_curriculum_dataset
from .nn import (
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    MaxPool1D,
    MaxPool2D,
    NetworkSpec,
    TrainConfig,
    build_preset,
    evaluate,
    init_weights,
    predict_probabilities,
    save_network,
)
from .robustness import (
    multires_swap_attack,
    noisy_accuracy,
    one_pixel_attack,
    robustness_rho,
    swap_attack_success_table,
)
from .signalprep import log_mel_spectrogram, normalize_images, preprocess_waveform, probability_vote

OUTPUT_ROOT_ENV = "MRLEARN_OUTPUT_ROOT"

DATASET_FORMATS = ("synthetic-1d", "synthetic-2d", "wav-dir", "image-bin", "image-dir")
PREPROCESSING_PRESETS = ("none", "waveform", "normalize-images", "logmel-segments")


# ---------------------------------------------------------------------------
# config schema


def _build(cls, raw, context):
    if not isinstance(raw, dict):
        raise ConfigError(f"{context}: expected an object, got {type(raw).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}; known keys are {sorted(known)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


@dataclass(frozen=True)
class DatasetConfig:
    format: str = "synthetic-1d"
    path: str | None = None
    # synthetic generators
    n_samples: int = 200
    length: int = 128
    image_size: int = 16
    channels: int = 1
    generator_noise: float = 0.1
    # flat binary images
    rows: int = 32
    cols: int = 32
    # splitting
    split: tuple = (0.64, 0.16, 0.20)
    training_fraction: float = 1.0
    seed: int = 12345
    cross_validation_folds: int = 0
    cv_max_combinations: int = 0
    # preprocessing
    preprocessing: str = "none"
    target_length: int = 16000
    window: int = 1024
    hop: int = 512
    mel_bands: int = 60
    segment_frames: int = 41
    segment_hop: int = 20

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(float(r) for r in self.split))
        if self.format not in DATASET_FORMATS:
            raise ConfigError(f"unknown dataset format {self.format!r}; choose from {DATASET_FORMATS}")
        if self.preprocessing not in PREPROCESSING_PRESETS:
            raise ConfigError(
                f"unknown preprocessing preset {self.preprocessing!r}; choose from {PREPROCESSING_PRESETS}"
            )
        if self.format not in ("synthetic-1d", "synthetic-2d") and not self.path:
            raise ConfigError(f"dataset format {self.format!r} requires a path")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {self.split}")
        if not 0.0 < self.training_fraction <= 1.0:
            raise ConfigError(f"training_fraction must be in (0, 1], got {self.training_fraction}")


@dataclass(frozen=True)
class NetworkConfig:
    preset: str | None = None
    layers: tuple | None = None
    auto: bool = False
    pool_stride: int = 2

    def __post_init__(self):
        chosen = sum(int(bool(v)) for v in (self.preset, self.layers, self.auto))
        if chosen != 1:
            raise ConfigError("network config needs exactly one of: preset, layers, auto")
        if self.preset is not None:
            from .nn.presets import PRESETS

            if self.preset not in PRESETS:
                raise ConfigError(
                    f"unknown network preset {self.preset!r}; available: {sorted(PRESETS)}"
                )
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(dict(entry) for entry in self.layers))


@dataclass(frozen=True)
class AttacksConfig:
    noise: bool = False
    noise_density: float = 0.05
    noise_sigma: float = 0.75
    deepfool: bool = False
    deepfool_max_iter: int = 50
    deepfool_overshoot: float = 0.02
    deepfool_max_samples: int = 0  # 0 = whole test set
    one_pixel: bool = False
    one_pixel_pop: int = 75
    one_pixel_gens: int = 40
    one_pixel_max_samples: int = 20
    subband_swap: bool = False
    swap_max_samples: int = 50

    def any_enabled(self) -> bool:
        return self.noise or self.deepfool or self.one_pixel or self.subband_swap


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    network: NetworkConfig = field(default_factory=lambda: NetworkConfig(auto=True))
    k_levels: tuple = (1,)
    total_epochs: int = 30
    learning_rate: float = 0.02
    momentum: float = 0.2
    weight_decay: float = 0.001
    batch_size: int = 23
    early_stop_patience: int = 20
    validation_resolution: str = "phase"
    seeds: tuple = (0,)
    attacks: AttacksConfig = field(default_factory=AttacksConfig)
    output_dir: str = "mrlearn-out"
    save_checkpoints: bool = True

    def __post_init__(self):
        ks = self.k_levels if isinstance(self.k_levels, (list, tuple)) else (self.k_levels,)
        object.__setattr__(self, "k_levels", tuple(int(k) for k in ks))
        seeds = self.seeds if isinstance(self.seeds, (list, tuple)) else (self.seeds,)
        object.__setattr__(self, "seeds", tuple(int(s) for s in seeds))
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if not self.k_levels or any(k < 1 for k in self.k_levels):
            raise ConfigError(f"k_levels must be positive integers, got {self.k_levels}")
        if any(self.total_epochs < k for k in self.k_levels):
            raise ConfigError(
                f"total_epochs {self.total_epochs} is smaller than some k in {self.k_levels}"
            )
        if self.validation_resolution not in ("phase", "original"):
            raise ConfigError("validation_resolution must be 'phase' or 'original'")

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            max_epochs=self.total_epochs,
            early_stop_patience=self.early_stop_patience,
            seed=seed,
        )


def parse_config(source) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a dict, JSON text or file path."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: not valid JSON ({exc})") from exc
    elif isinstance(source, str):
        try:
            raw = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config string is not valid JSON ({exc})") from exc
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        raise ConfigError(f"cannot parse config from {type(source).__name__}")

    raw = dict(raw)
    nested = {}
    if "dataset" in raw:
        nested["dataset"] = _build(DatasetConfig, raw.pop("dataset"), "dataset")
    if "network" in raw:
        nested["network"] = _build(NetworkConfig, raw.pop("network"), "network")
    if "attacks" in raw:
        nested["attacks"] = _build(AttacksConfig, raw.pop("attacks"), "attacks")
    config = _build(ExperimentConfig, {**raw, **nested}, "config")
    _validate_attack_compatibility(config)
    return config


def _validate_attack_compatibility(config: ExperimentConfig) -> None:
    two_dimensional = config.dataset.format in ("synthetic-2d", "image-bin", "image-dir") or (
        config.dataset.preprocessing == "logmel-segments"
    )
    if config.attacks.one_pixel and not two_dimensional:
        raise ConfigError("the one_pixel attack needs a 2D dataset")
    if config.attacks.subband_swap and not two_dimensional:
        raise ConfigError("the subband_swap attack needs a 2D dataset")
    if config.attacks.noise and two_dimensional:
        raise ConfigError("the impulsive noise evaluation is defined for 1D datasets")
    if config.network.preset == "fsdd-samplecnn" and two_dimensional:
        raise ConfigError("preset fsdd-samplecnn expects 1D input")
    if config.network.preset == "esc10-piczak-variant" and not two_dimensional:
        raise ConfigError("preset esc10-piczak-variant expects 2D input")


# ---------------------------------------------------------------------------
# dataset assembly


@dataclass
class LoadedSplit:
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    dimensionality: str
    num_classes: int
    test_groups: np.ndarray | None = None  # clip ids for segment voting


def _load_raw(cfg: DatasetConfig):
    """Raw samples + labels before splitting.  1D output is (n, length, 1);
    2D output is (n, rows, cols, channels)."""
    if cfg.format == "synthetic-1d":
        return synthetic_wave_dataset(cfg.n_samples, cfg.length, cfg.seed, cfg.generator_noise) + ("1D",)
    if cfg.format == "synthetic-2d":
        X, y = synthetic_patch_dataset(cfg.n_samples, cfg.image_size, cfg.channels, cfg.seed, cfg.generator_noise)
        return X, y, "2D"
    if cfg.format == "wav-dir":
        clips = read_wav_directory(cfg.path)
        if cfg.preprocessing == "logmel-segments":
            return clips, None, "clips"
        processed = [preprocess_waveform(c, cfg.target_length) for c in clips]
        X = np.stack([c.samples for c in processed])[:, :, None]
        y = np.array([c.label for c in processed], dtype=np.int64)
        return X, y, "1D"
    if cfg.format == "image-bin":
        X, y = read_image_batch(cfg.path, cfg.rows, cfg.cols, cfg.channels)
        return X, y, "2D"
    if cfg.format == "image-dir":
        X, y, _ = read_image_directory(cfg.path)
        if X.ndim == 3:
            X = X[..., None]
        return X, y, "2D"
    raise ConfigError(f"unknown dataset format {cfg.format!r}")


def _segments_for_clips(clips, cfg: DatasetConfig):
    """ESC-style path: clip -> log-mel spectrogram -> fixed-width segments.
    Returns (X, y, groups) where groups ties each segment to its clip."""
    xs, ys, groups = [], [], []
    for clip_idx, clip in enumerate(clips):
        spec = log_mel_spectrogram(clip, cfg.window, cfg.hop, cfg.mel_bands)
        segs = [
            spec.values[:, s : s + cfg.segment_frames]
            for s in range(0, spec.values.shape[1] - cfg.segment_frames + 1, cfg.segment_hop)
        ]
        for seg in segs:
            xs.append(seg[..., None])
            ys.append(clip.label)
            groups.append(clip_idx)
    if not xs:
        raise DataError("no segments could be extracted; clips may be too short")
    return np.stack(xs), np.asarray(ys, dtype=np.int64), np.asarray(groups)


def load_dataset(cfg: DatasetConfig, seed: int, fold_combo=None) -> LoadedSplit:
    """Assemble preprocessed, deterministically split data.

    ``seed`` controls the split shuffle; generation of synthetic data uses
    the dataset's own seed so every run sees the same corpus.  When
    ``fold_combo`` (train, val, test index arrays) is given it replaces the
    ratio-based split.
    """
    raw = _load_raw(cfg)
    if raw[2] == "clips":
        clips = raw[0]
        n = len(clips)
        if fold_combo is not None:
            tr, va, te = fold_combo
        else:
            tr, va, te = split_indices(n, cfg.split, seed)
            tr = reduce_training_indices(tr, cfg.training_fraction)
        X_train, y_train, _ = _segments_for_clips([clips[i] for i in tr], cfg)
        X_val, y_val, _ = _segments_for_clips([clips[i] for i in va], cfg)
        X_test, y_test, test_groups = _segments_for_clips([clips[i] for i in te], cfg)
        num_classes = int(max(y_train.max(), y_val.max(), y_test.max())) + 1
        return LoadedSplit(X_train, y_train, X_val, y_val, X_test, y_test, "2D", num_classes, test_groups)

    X, y, dimensionality = raw
    n = X.shape[0]
    if fold_combo is not None:
        tr, va, te = fold_combo
    else:
        tr, va, te = split_indices(n, cfg.split, seed)
        tr = reduce_training_indices(tr, cfg.training_fraction)
    if len(tr) == 0 or len(va) == 0 or len(te) == 0:
        raise DataError(f"split {cfg.split} of {n} samples leaves an empty subset")
    X_train, y_train = X[tr], y[tr]
    X_val, y_val = X[va], y[va]
    X_test, y_test = X[te], y[te]
    if cfg.preprocessing == "normalize-images":
        _, stats = normalize_images(X_train)
        X_train = (X_train - stats[0]) / stats[1]
        X_val = (X_val - stats[0]) / stats[1]
        X_test = (X_test - stats[0]) / stats[1]
    num_classes = int(y.max()) + 1
    return LoadedSplit(X_train, y_train, X_val, y_val, X_test, y_test, dimensionality, num_classes)


# ---------------------------------------------------------------------------
# network assembly


def _auto_spec(input_shape, num_classes: int) -> NetworkSpec:
    """Compact default CNN sized for desk-scale experiments.

    Deliberately shallow (one conv block): with the Normal(0, 0.02) weight
    initialiser, deep stacks start with vanishing activations and need far
    more epochs than a smoke run affords.  The pool is skipped when the
    spatial dimensions are too small for it.
    """
    from .nn.network import _out_shape

    layers = []
    shape = tuple(input_shape)

    def try_add(layer) -> bool:
        nonlocal shape
        try:
            shape = _out_shape(layer, shape)
        except Exception:
            return False
        layers.append(layer)
        return True

    if len(input_shape) == 2:
        if try_add(Conv1D(8, 5)):
            try_add(MaxPool1D(4, 4))
    else:
        if try_add(Conv2D(8, (3, 3))):
            try_add(MaxPool2D((2, 2), (2, 2)))
    layers.append(Flatten())
    layers.append(Dense(num_classes, activation="linear"))
    return NetworkSpec(tuple(layers), input_shape, num_classes)


def build_network_spec(netcfg: NetworkConfig, input_shape, num_classes: int) -> NetworkSpec:
    if netcfg.preset == "fsdd-samplecnn":
        return build_preset(netcfg.preset, input_length=input_shape[0], num_classes=num_classes)
    if netcfg.preset == "esc10-piczak-variant":
        return build_preset(
            netcfg.preset, input_shape=input_shape, num_classes=num_classes, pool_stride=netcfg.pool_stride
        )
    if netcfg.preset is not None:
        return build_preset(netcfg.preset)
    if netcfg.auto:
        return _auto_spec(tuple(input_shape), num_classes)
    spec_json = json.dumps(
        {"layers": list(netcfg.layers), "input_shape": list(input_shape), "num_classes": num_classes}
    )
    try:
        return NetworkSpec.from_json(spec_json)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"network layers: {exc}") from exc


# ---------------------------------------------------------------------------
# run loop


def mode_label(k: int) -> str:
    return "TL" if k == 1 else f"ML ({k})"


def mode_slug(k: int) -> str:
    return "tl" if k == 1 else f"ml-{k}"


def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and value != value:  # NaN
        return None
    return value


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_json_ready(payload), sort_keys=True, indent=2) + "\n")


def _vote_accuracy(network, X, y, groups) -> float:
    probs = predict_probabilities(network, X)
    correct = 0
    clip_ids = np.unique(groups)
    for cid in clip_ids:
        mask = groups == cid
        label = int(y[mask][0])
        correct += int(probability_vote(probs[mask]) == label)
    return correct / len(clip_ids)


def _run_attacks(network, data: LoadedSplit, attacks: AttacksConfig, seed: int, run_dir: Path):
    """Returns attack metrics (deterministic) and writes per-sample CSVs."""
    metrics = {}
    X_test, y_test = data.X_test, data.y_test
    probs = predict_probabilities(network, X_test)
    predicted = probs.argmax(axis=1)
    correct_idx = np.flatnonzero(predicted == y_test)

    if attacks.noise:
        metrics["noisy_test_accuracy"] = noisy_accuracy(
            network, X_test, y_test, attacks.noise_density, attacks.noise_sigma, seed
        )

    if attacks.deepfool:
        limit = attacks.deepfool_max_samples or X_test.shape[0]
        subset = np.arange(X_test.shape[0])[:limit]
        report = robustness_rho(
            network,
            X_test[subset],
            max_iter=attacks.deepfool_max_iter,
            overshoot=attacks.deepfool_overshoot,
            labels=y_test[subset],
            seed=seed,
        )
        metrics["rho"] = report.rho
        metrics["deepfool_success_rate"] = report.attack_success_rate
        metrics["deepfool_samples"] = int(len(subset))
        (run_dir / "attacks").mkdir(exist_ok=True)
        (run_dir / "attacks" / "deepfool.csv").write_text(report.to_csv())

    if attacks.one_pixel:
        rng = np.random.default_rng((seed, 101))
        pool = correct_idx.copy()
        rng.shuffle(pool)
        chosen = pool[: attacks.one_pixel_max_samples]
        rows = []
        successes = 0
        for idx in chosen:
            image = X_test[idx]
            pert = one_pixel_attack(
                network,
                image,
                pop_size=attacks.one_pixel_pop,
                max_gens=attacks.one_pixel_gens,
                seed=int(np.random.default_rng((seed, 202, int(idx))).integers(0, 2**31)),
            )
            successes += int(pert.success)
            rows.append((int(idx), int(y_test[idx]), int(pert.success), pert.l2_norm, pert.iterations_used))
        if chosen.size:
            metrics["one_pixel_success_rate"] = successes / len(chosen)
            metrics["one_pixel_samples"] = int(len(chosen))
            (run_dir / "attacks").mkdir(exist_ok=True)
            with open(run_dir / "attacks" / "one_pixel.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["id", "label", "success", "l2_norm", "generations"])
                for row in rows:
                    writer.writerow([row[0], row[1], row[2], f"{row[3]:.12g}", row[4]])

    if attacks.subband_swap:
        rng = np.random.default_rng((seed, 303))
        pool = correct_idx.copy()
        rng.shuffle(pool)
        chosen = pool[: attacks.swap_max_samples]
        per_band = {"LH": [], "HL": [], "HH": []}
        rows = []
        for idx in chosen:
            others = np.flatnonzero(y_test != y_test[idx])
            if others.size == 0:
                continue
            donor_idx = int(rng.choice(others))
            for band in ("LH", "HL", "HH"):
                adversarial = multires_swap_attack(X_test[idx], X_test[donor_idx], band=band)
                pred = int(predict_probabilities(network, adversarial[None, ...])[0].argmax())
                success = pred != int(y_test[idx])
                per_band[band].append(success)
                rows.append((int(idx), donor_idx, band, int(y_test[idx]), pred, int(success)))
        if rows:
            table = swap_attack_success_table(per_band)
            metrics["swap_success_rates"] = {band: rate for band, _, rate in table}
            metrics["swap_samples"] = int(len(chosen))
            (run_dir / "attacks").mkdir(exist_ok=True)
            with open(run_dir / "attacks" / "subband_swap.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["id", "donor_id", "band", "label", "predicted", "success"])
                for row in rows:
                    writer.writerow(row)
    return metrics


def _run_single(config: ExperimentConfig, k: int, seed: int, run_dir: Path, fold_combo=None) -> dict:
    data = load_dataset(config.dataset, seed, fold_combo)
    spec = build_network_spec(config.network, data.X_train.shape[1:], data.num_classes)
    versions = build_curriculum_dataset(data.X_train, k, data.dimensionality)
    plan = plan_phases(config.total_epochs, k, data.dimensionality)
    network = init_weights(spec, seed)
    network, report = train_multiresolution(
        network,
        versions,
        data.y_train,
        data.X_val,
        data.y_val,
        plan,
        config.train_config(seed),
        data.dimensionality,
        config.validation_resolution,
        checkpoint_dir=(run_dir / "checkpoints") if config.save_checkpoints else None,
    )
    test_accuracy, test_loss = evaluate(network, data.X_test, data.y_test)

    run_dir.mkdir(parents=True, exist_ok=True)
    metrics = {
        "mode": mode_label(k),
        "k_levels": k,
        "seed": seed,
        "clean_test_accuracy": test_accuracy,
        "clean_test_loss": test_loss,
        "epochs_run": report.total_epochs_run,
        "final_validation_accuracy": report.final_validation_accuracy,
        "final_validation_loss": report.final_validation_loss,
    }
    if data.test_groups is not None:
        metrics["vote_test_accuracy"] = _vote_accuracy(network, data.X_test, data.y_test, data.test_groups)
    metrics.update(_run_attacks(network, data, config.attacks, seed, run_dir))

    _write_json(run_dir / "metrics.json", metrics)
    _write_json(run_dir / "train_report.json", report.to_dict(include_wall_clock=False))
    _write_json(run_dir / "timing.json", {"wall_clock_seconds": report.wall_clock_seconds})
    if config.save_checkpoints:
        save_network(network, run_dir / "checkpoint.npz")
    return metrics


def _aggregate(per_run: list) -> dict:
    """Mean/std over runs for every shared numeric metric, grouped by mode."""
    modes = {}
    for metrics in per_run:
        modes.setdefault(metrics["mode"], []).append(metrics)
    out = {}
    for mode, runs in modes.items():
        summary = {"runs": len(runs), "k_levels": runs[0]["k_levels"]}
        numeric_keys = set()
        for metrics in runs:
            for key, value in metrics.items():
                if isinstance(value, (int, float)) and key not in ("k_levels", "seed"):
                    numeric_keys.add(key)
        for key in sorted(numeric_keys):
            values = [m[key] for m in runs if isinstance(m.get(key), (int, float))]
            clean = [v for v in values if v == v]  # drop NaN
            if clean:
                summary[f"mean_{key}"] = float(np.mean(clean))
                summary[f"std_{key}"] = float(np.std(clean))
        if all("swap_success_rates" in m for m in runs):
            bands = {}
            for band in ("LH", "HL", "HH", "Total"):
                bands[band] = float(np.mean([m["swap_success_rates"][band] for m in runs]))
            summary["mean_swap_success_rates"] = bands
        out[mode] = summary
    return out


def run_experiment(config, output_root=None) -> Path:
    """Execute every (mode, seed[, fold]) run and write the report bundle.

    Returns the bundle directory.  On failure an ``error.log`` with the
    traceback is left in the bundle and the exception propagates.
    """
    config = parse_config(config)
    root = output_root or os.environ.get(OUTPUT_ROOT_ENV, "")
    outdir = Path(root) / config.output_dir if root else Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        _write_json(outdir / "config.echo.json", _config_to_dict(config))
        folds = config.dataset.cross_validation_folds
        per_run = []
        for k in config.k_levels:
            for seed in config.seeds:
                if folds > 0:
                    n = _dataset_size(config.dataset)
                    combos = kfold_combinations(n, folds, config.dataset.seed)
                    if config.dataset.cv_max_combinations > 0:
                        combos = combos[: config.dataset.cv_max_combinations]
                    for c_idx, combo in enumerate(combos):
                        run_dir = outdir / "runs" / mode_slug(k) / f"seed{seed}-cv{c_idx:02d}"
                        per_run.append(_run_single(config, k, seed, run_dir, combo))
                else:
                    run_dir = outdir / "runs" / mode_slug(k) / f"seed{seed}"
                    per_run.append(_run_single(config, k, seed, run_dir))
        _write_json(outdir / "aggregate.json", _aggregate(per_run))
        emit_plot_data(outdir)
    except Exception:
        (outdir / "error.log").write_text(traceback.format_exc())
        raise
    return outdir


def _dataset_size(cfg: DatasetConfig) -> int:
    raw = _load_raw(cfg)
    return len(raw[0]) if raw[2] == "clips" else raw[0].shape[0]


def _config_to_dict(config: ExperimentConfig) -> dict:
    out = dataclasses.asdict(config)
    return out


# ---------------------------------------------------------------------------
# plot data


def emit_plot_data(bundle_dir) -> list:
    """Write CSV series for cross-mode comparisons from a finished bundle.

    * ``accuracy.csv`` -- one row per (mode, seed/fold run);
    * ``robustness_rho.csv`` -- rho per run (only when the sweep ran);
    * ``attack_success.csv`` -- per-band swap success rates, LH/HL/HH/Total
      (only when the swap attack ran).
    """
    bundle_dir = Path(bundle_dir)
    runs_root = bundle_dir / "runs"
    if not runs_root.is_dir():
        raise DataError(f"{bundle_dir} has no runs/ directory; the training stage did not complete")
    rows = []
    for metrics_path in sorted(runs_root.glob("*/*/metrics.json")):
        rows.append(json.loads(metrics_path.read_text()))
    if not rows:
        raise DataError(f"{bundle_dir} contains no per-run metrics; nothing to plot")

    plots = bundle_dir / "plots"
    plots.mkdir(exist_ok=True)
    written = []

    acc_path = plots / "accuracy.csv"
    with open(acc_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["mode", "seed", "clean_test_accuracy"]
        if any("noisy_test_accuracy" in r for r in rows):
            header.append("noisy_test_accuracy")
        if any("vote_test_accuracy" in r for r in rows):
            header.append("vote_test_accuracy")
        writer.writerow(header)
        for r in rows:
            line = [r["mode"], r["seed"], f"{r['clean_test_accuracy']:.12g}"]
            if "noisy_test_accuracy" in header:
                line.append(f"{r['noisy_test_accuracy']:.12g}" if "noisy_test_accuracy" in r else "")
            if "vote_test_accuracy" in header:
                line.append(f"{r['vote_test_accuracy']:.12g}" if "vote_test_accuracy" in r else "")
            writer.writerow(line)
    written.append(acc_path)

    if any("rho" in r for r in rows):
        rho_path = plots / "robustness_rho.csv"
        with open(rho_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mode", "seed", "rho", "deepfool_success_rate"])
            for r in rows:
                if "rho" in r:
                    rho = r["rho"]
                    writer.writerow(
                        [
                            r["mode"],
                            r["seed"],
                            f"{rho:.12g}" if rho is not None else "",
                            f"{r['deepfool_success_rate']:.12g}",
                        ]
                    )
        written.append(rho_path)

    if any("swap_success_rates" in r for r in rows):
        swap_path = plots / "attack_success.csv"
        modes = {}
        for r in rows:
            if "swap_success_rates" in r:
                modes.setdefault(r["mode"], []).append(r["swap_success_rates"])
        with open(swap_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mode", "band", "success_rate"])
            for mode in sorted(modes):
                for band in ("LH", "HL", "HH", "Total"):
                    rate = float(np.mean([s[band] for s in modes[mode]]))
                    writer.writerow([mode, band, f"{rate:.12g}"])
        written.append(swap_path)
    return written
