"""Coarse-to-fine training: phase planning, the epoch loop, early stopping.

Training runs as an ordered sequence of phases, one per resolution version,
coarsest first.  Weights flow across phase boundaries unchanged (the whole
point of the scheme); momentum buffers are reset at each boundary since
velocity is an optimiser artifact, not model knowledge.  Single-resolution
("traditional") training is exactly the one-phase special case.

Per-phase ReLU slope follows ``0.85 + 0.15 * index`` so the finest phase
(index 1) uses the ordinary ReLU.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .multires import build_resolution
from .nn import Network, TrainConfig, backward, cross_entropy, evaluate, forward, save_network, sgd_step
from .validation import check_batch, check_labels

EARLY_STOP_MIN_DELTA = 1e-6


def phase_relu_slope(index: int) -> float:
    """Rectifier slope for a phase training on resolution ``index``."""
    if index < 1:
        raise ValueError(f"resolution index must be >= 1, got {index}")
    return 0.85 + 0.15 * index


@dataclass(frozen=True)
class Phase:
    resolution_index: int
    epoch_budget: int
    relu_slope: float


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple
    total_epochs: int
    k_levels: int

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        indices = [p.resolution_index for p in self.phases]
        if indices != sorted(indices, reverse=True) or len(set(indices)) != len(indices):
            raise ValueError(f"phase indices must strictly decrease, got {indices}")
        if indices and indices[-1] != 1:
            raise ValueError("the final phase must train on the original data (index 1)")
        budgets = [p.epoch_budget for p in self.phases]
        if sum(budgets) != self.total_epochs:
            raise ValueError(f"phase budgets {budgets} do not sum to {self.total_epochs}")
        if budgets and max(budgets) - min(budgets) > 1:
            raise ValueError(f"phase budgets {budgets} differ by more than one epoch")


def plan_phases(total_epochs: int, k_levels: int, dimensionality: str = "1D") -> PhasePlan:
    """Split ``total_epochs`` evenly over ``k_levels`` phases, coarsest first.

    A remainder goes to the earlier (coarser) phases, one epoch each.
    ``dimensionality`` only documents which ladder the indices refer to;
    the plan itself is the same either way.
    """
    if dimensionality not in ("1D", "2D"):
        raise ValueError(f"dimensionality must be '1D' or '2D', got {dimensionality!r}")
    if k_levels < 1:
        raise ValueError(f"k_levels must be >= 1, got {k_levels}")
    if total_epochs < k_levels:
        raise ValueError(f"total_epochs {total_epochs} is less than k_levels {k_levels}")
    base, remainder = divmod(total_epochs, k_levels)
    phases = []
    for position, index in enumerate(range(k_levels, 0, -1)):
        budget = base + (1 if position < remainder else 0)
        phases.append(Phase(resolution_index=index, epoch_budget=budget, relu_slope=phase_relu_slope(index)))
    return PhasePlan(phases=tuple(phases), total_epochs=total_epochs, k_levels=k_levels)


def early_stop_check(validation_history, patience: int) -> str:
    """``"stop"`` once the validation loss has not improved (strict decrease
    beyond 1e-6 below the best so far) for ``patience`` consecutive epochs."""
    if patience < 1:
        raise ValueError(f"patience must be >= 1, got {patience}")
    history = list(validation_history)
    if len(history) < 2:
        return "continue"
    best = history[0]
    last_improvement = 0
    for epoch, value in enumerate(history[1:], start=1):
        if value < best - EARLY_STOP_MIN_DELTA:
            best = value
            last_improvement = epoch
        elif value < best:
            best = value
    return "stop" if len(history) - 1 - last_improvement >= patience else "continue"


@dataclass
class PhaseRecord:
    """Curves and outcome of one executed phase."""

    resolution_index: int
    relu_slope: float
    epoch_budget: int
    epochs_run: int
    stopped_early: bool
    train_loss: list = field(default_factory=list)
    validation_loss: list = field(default_factory=list)
    validation_accuracy: list = field(default_factory=list)
    end_param_digest: str = ""

    def to_dict(self) -> dict:
        return {
            "resolution_index": self.resolution_index,
            "relu_slope": self.relu_slope,
            "epoch_budget": self.epoch_budget,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
            "train_loss": list(self.train_loss),
            "validation_loss": list(self.validation_loss),
            "validation_accuracy": list(self.validation_accuracy),
            "end_param_digest": self.end_param_digest,
        }


@dataclass
class TrainReport:
    """Full history of a training run; ``wall_clock_seconds`` is the only
    non-deterministic field and is kept out of metric files by callers."""

    phases: list
    seed: int
    total_epochs_run: int
    final_train_accuracy: float
    final_train_loss: float
    final_validation_accuracy: float
    final_validation_loss: float
    wall_clock_seconds: float

    def to_dict(self, include_wall_clock: bool = True) -> dict:
        out = {
            "seed": self.seed,
            "total_epochs_run": self.total_epochs_run,
            "final_train_accuracy": self.final_train_accuracy,
            "final_train_loss": self.final_train_loss,
            "final_validation_accuracy": self.final_validation_accuracy,
            "final_validation_loss": self.final_validation_loss,
            "phases": [p.to_dict() for p in self.phases],
        }
        if include_wall_clock:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out


def train_network(
    network: Network,
    X_train,
    y_train,
    X_val,
    y_val,
    config: TrainConfig,
    relu_slope: float = 1.0,
    max_epochs: int | None = None,
    rng=None,
) -> PhaseRecord:
    """Plain epoch loop: shuffle, minibatch SGD, per-epoch validation with
    early stopping (best weights restored when it fires).

    This is both the traditional single-resolution trainer and the executor
    for each curriculum phase.
    """
    X_train = check_batch(X_train, "X_train")
    y_train = check_labels(y_train, X_train.shape[0], "y_train")
    X_val = check_batch(X_val, "X_val")
    y_val = check_labels(y_val, X_val.shape[0], "y_val")
    if config.batch_size > X_train.shape[0]:
        raise ValueError(
            f"batch_size {config.batch_size} exceeds training set size {X_train.shape[0]}"
        )
    if rng is None:
        rng = np.random.default_rng(config.seed)
    epochs = config.max_epochs if max_epochs is None else max_epochs

    record = PhaseRecord(
        resolution_index=1,
        relu_slope=relu_slope,
        epoch_budget=epochs,
        epochs_run=0,
        stopped_early=False,
    )
    best_params = None
    best_loss = np.inf
    n = X_train.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb, yb = X_train[batch_idx], y_train[batch_idx]
            state = forward(network, xb, "train", relu_slope, rng=rng)
            grads = backward(network, state, yb, config.weight_decay)
            sgd_step(network, grads, config)
            epoch_loss += cross_entropy(state.logits, yb) * xb.shape[0]
        record.train_loss.append(epoch_loss / n)
        val_acc, val_loss = evaluate(network, X_val, y_val, relu_slope)
        record.validation_loss.append(val_loss)
        record.validation_accuracy.append(val_acc)
        record.epochs_run += 1
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = network.copy_params()
        if early_stop_check(record.validation_loss, config.early_stop_patience) == "stop":
            record.stopped_early = True
            if best_params is not None:
                network.load_params(best_params)
            break
    record.end_param_digest = network.param_digest()
    return record


def train_multiresolution(
    network: Network,
    curriculum_versions,
    y_train,
    X_val,
    y_val,
    plan: PhasePlan,
    config: TrainConfig,
    dimensionality: str = "1D",
    validation_resolution: str = "phase",
    checkpoint_dir=None,
):
    """Execute the planned phases in order with weight carry-over.

    ``curriculum_versions`` is the coarsest-first output of
    :func:`mrlearn.multires.build_curriculum_dataset`; its indices must match
    the plan.  Validation data is given at the original resolution and, with
    ``validation_resolution="phase"`` (the default), transformed to each
    phase's resolution so the distributions match within a phase; pass
    ``"original"`` to validate on untouched data instead.

    With ``checkpoint_dir`` set, the parameter state at the end of every
    phase is written there as ``phase<position>_res<index>.npz``.
    """
    if validation_resolution not in ("phase", "original"):
        raise ValueError(f"validation_resolution must be 'phase' or 'original', got {validation_resolution!r}")
    versions = list(curriculum_versions)
    if len(versions) != len(plan.phases):
        raise ValueError(f"{len(versions)} dataset versions for {len(plan.phases)} phases")
    for version, phase in zip(versions, plan.phases):
        if version.index != phase.resolution_index:
            raise ValueError(
                f"dataset version index {version.index} does not match phase index {phase.resolution_index}"
            )
        if version.data.shape[0] != len(y_train):
            raise DimensionError("dataset version size does not match label count")

    X_val = check_batch(X_val, "X_val")
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    records = []
    total_run = 0
    for position, (version, phase) in enumerate(zip(versions, plan.phases)):
        network.reset_velocity()
        if validation_resolution == "phase" and phase.resolution_index != 1:
            val_x = np.stack(
                [build_resolution(sample, phase.resolution_index, dimensionality).data for sample in X_val]
            )
        else:
            val_x = X_val
        record = train_network(
            network,
            version.data,
            y_train,
            val_x,
            y_val,
            config,
            relu_slope=phase.relu_slope,
            max_epochs=phase.epoch_budget,
            rng=rng,
        )
        record.resolution_index = phase.resolution_index
        total_run += record.epochs_run
        records.append(record)
        if checkpoint_dir is not None:
            directory = Path(checkpoint_dir)
            directory.mkdir(parents=True, exist_ok=True)
            save_network(network, directory / f"phase{position}_res{phase.resolution_index}.npz")

    finest = versions[-1]
    train_acc, train_loss = evaluate(network, finest.data, y_train, relu_slope=1.0)
    val_acc, val_loss = evaluate(network, X_val, y_val, relu_slope=1.0)
    report = TrainReport(
        phases=records,
        seed=config.seed,
        total_epochs_run=total_run,
        final_train_accuracy=train_acc,
        final_train_loss=train_loss,
        final_validation_accuracy=val_acc,
        final_validation_loss=val_loss,
        wall_clock_seconds=time.perf_counter() - started,
    )
    return network, report
