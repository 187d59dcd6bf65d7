"""Declarative network specs and the training-side operations on them.

A :class:`NetworkSpec` is an ordered tuple of layer descriptors plus the
input shape and class count; shapes are checked statically when the spec is
built.  A :class:`Network` binds a spec to concrete float64 parameter arrays
and momentum buffers.  The functions here are the full training surface:
``init_weights``, ``forward``, ``backward``, ``sgd_step``, ``evaluate``,
plus logit/input gradients for the attack code and bit-exact checkpoint I/O.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, FormatError, StateError
from ..validation import check_batch, check_labels
from . import layers as L

CHECKPOINT_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# layer descriptors


@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel: int
    stride: int = 1
    activation: str = "relu"
    kind: str = field(default="conv1d", init=False)


@dataclass(frozen=True)
class Conv2D:
    filters: int
    kernel: tuple = (3, 3)
    stride: tuple = (1, 1)
    activation: str = "relu"
    kind: str = field(default="conv2d", init=False)


@dataclass(frozen=True)
class MaxPool1D:
    pool: int = 2
    stride: int = 2
    kind: str = field(default="maxpool1d", init=False)


@dataclass(frozen=True)
class MaxPool2D:
    pool: tuple = (2, 2)
    stride: tuple = (2, 2)
    kind: str = field(default="maxpool2d", init=False)


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "relu"
    kind: str = field(default="dense", init=False)


@dataclass(frozen=True)
class Dropout:
    rate: float = 0.5
    kind: str = field(default="dropout", init=False)


@dataclass(frozen=True)
class Flatten:
    kind: str = field(default="flatten", init=False)


_LAYER_CLASSES = {
    "conv1d": Conv1D,
    "conv2d": Conv2D,
    "maxpool1d": MaxPool1D,
    "maxpool2d": MaxPool2D,
    "dense": Dense,
    "dropout": Dropout,
    "flatten": Flatten,
}

_ACTIVATIONS = ("relu", "linear")


def _out_shape(layer, shape):
    """Shape after ``layer`` given input ``shape`` (without the batch axis)."""
    if layer.kind == "conv1d":
        if len(shape) != 2:
            raise DimensionError(f"conv1d needs (length, channels) input, got {shape}")
        length, _ = shape
        out_len = (length - layer.kernel) // layer.stride + 1
        if out_len < 1:
            raise DimensionError(f"conv1d kernel {layer.kernel} does not fit length {length}")
        return (out_len, layer.filters)
    if layer.kind == "conv2d":
        if len(shape) != 3:
            raise DimensionError(f"conv2d needs (rows, cols, channels) input, got {shape}")
        r = (shape[0] - layer.kernel[0]) // layer.stride[0] + 1
        c = (shape[1] - layer.kernel[1]) // layer.stride[1] + 1
        if r < 1 or c < 1:
            raise DimensionError(f"conv2d kernel {layer.kernel} does not fit input {shape[:2]}")
        return (r, c, layer.filters)
    if layer.kind == "maxpool1d":
        out_len = (shape[0] - layer.pool) // layer.stride + 1
        if out_len < 1:
            raise DimensionError(f"maxpool1d window {layer.pool} does not fit length {shape[0]}")
        return (out_len, shape[1])
    if layer.kind == "maxpool2d":
        r = (shape[0] - layer.pool[0]) // layer.stride[0] + 1
        c = (shape[1] - layer.pool[1]) // layer.stride[1] + 1
        if r < 1 or c < 1:
            raise DimensionError(f"maxpool2d window {layer.pool} does not fit input {shape[:2]}")
        return (r, c, shape[2])
    if layer.kind == "dense":
        if len(shape) != 1:
            raise DimensionError(f"dense needs flat input, got {shape}; add a Flatten layer")
        return (layer.units,)
    if layer.kind == "dropout":
        return shape
    if layer.kind == "flatten":
        return (int(np.prod(shape)),)
    raise ValueError(f"unknown layer kind {layer.kind!r}")


def _param_shapes(layer, in_shape):
    if layer.kind == "conv1d":
        return {"w": (layer.kernel, in_shape[1], layer.filters), "b": (layer.filters,)}
    if layer.kind == "conv2d":
        return {"w": (*layer.kernel, in_shape[2], layer.filters), "b": (layer.filters,)}
    if layer.kind == "dense":
        return {"w": (in_shape[0], layer.units), "b": (layer.units,)}
    return None


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers + input shape + class count, with static shape checks.

    ``input_shape`` is (length, channels) for 1D or (rows, cols, channels)
    for 2D.  The final layer must be a linear Dense whose units equal
    ``num_classes``; softmax is applied by the forward pass.
    """

    layers: tuple
    input_shape: tuple
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        for layer in self.layers:
            act = getattr(layer, "activation", None)
            if act is not None and act not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        if not self.layers or self.layers[-1].kind != "dense":
            raise ValueError("network must end with a Dense output layer")
        if self.layers[-1].units != self.num_classes:
            raise ValueError(
                f"output layer has {self.layers[-1].units} units for {self.num_classes} classes"
            )
        if self.layers[-1].activation != "linear":
            raise ValueError("output layer activation must be 'linear' (softmax is applied after)")
        self.layer_shapes()  # raises if consecutive layers do not compose

    def layer_shapes(self) -> list:
        """Per-layer output shapes (without the batch axis), input first."""
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(_out_shape(layer, shapes[-1]))
        return shapes

    def parameter_counts(self) -> list:
        """Analytic per-layer parameter counts, aligned with ``layers``."""
        counts = []
        shapes = self.layer_shapes()
        for layer, in_shape in zip(self.layers, shapes):
            ps = _param_shapes(layer, in_shape)
            if ps is None:
                counts.append(0)
            else:
                counts.append(int(np.prod(ps["w"])) + int(np.prod(ps["b"])))
        return counts

    def parameter_count(self) -> int:
        return sum(self.parameter_counts())

    def to_json(self) -> str:
        entries = []
        for layer in self.layers:
            entry = {"kind": layer.kind}
            for name in layer.__dataclass_fields__:
                if name == "kind":
                    continue
                value = getattr(layer, name)
                entry[name] = list(value) if isinstance(value, tuple) else value
            entries.append(entry)
        return json.dumps(
            {
                "layers": entries,
                "input_shape": list(self.input_shape),
                "num_classes": self.num_classes,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "NetworkSpec":
        raw = json.loads(text)
        built = []
        for entry in raw["layers"]:
            kind = entry.pop("kind")
            cls = _LAYER_CLASSES.get(kind)
            if cls is None:
                raise FormatError(f"unknown layer kind {kind!r} in network spec")
            for name, value in list(entry.items()):
                if isinstance(value, list):
                    entry[name] = tuple(value)
            built.append(cls(**entry))
        return NetworkSpec(tuple(built), tuple(raw["input_shape"]), int(raw["num_classes"]))


# ---------------------------------------------------------------------------
# parameter state


class Network:
    """A spec bound to parameter arrays plus SGD momentum buffers.

    ``step_token`` increments whenever parameters change; forward states
    remember the token they were computed under so a stale backward is
    rejected instead of silently producing wrong gradients.
    """

    def __init__(self, spec: NetworkSpec, params: list, velocity: list):
        self.spec = spec
        self.params = params
        self.velocity = velocity
        self.step_token = 0

    def parameter_count(self) -> int:
        total = 0
        for p in self.params:
            if p is not None:
                total += p["w"].size + p["b"].size
        return total

    def copy_params(self) -> list:
        return [None if p is None else {"w": p["w"].copy(), "b": p["b"].copy()} for p in self.params]

    def load_params(self, params: list) -> None:
        self.params = [None if p is None else {"w": p["w"].copy(), "b": p["b"].copy()} for p in params]
        self.step_token += 1

    def reset_velocity(self) -> None:
        for v in self.velocity:
            if v is not None:
                v["w"][:] = 0.0
                v["b"][:] = 0.0

    def param_digest(self) -> str:
        """SHA-256 over the concatenated parameter bytes, for handoff checks."""
        h = hashlib.sha256()
        for p in self.params:
            if p is not None:
                h.update(np.ascontiguousarray(p["w"]).tobytes())
                h.update(np.ascontiguousarray(p["b"]).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and loop settings shared by all training entry points."""

    learning_rate: float = 0.02
    momentum: float = 0.2
    weight_decay: float = 0.001
    batch_size: int = 23
    max_epochs: int = 500
    early_stop_patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name in ("batch_size", "max_epochs", "early_stop_patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


def init_weights(spec: NetworkSpec, seed: int) -> Network:
    """Fresh network: weights ~ Normal(0, 0.02), biases zero, zero velocity.

    Draw order is fixed (layer by layer), so a given seed always produces
    bit-identical parameters.
    """
    rng = np.random.default_rng(seed)
    shapes = spec.layer_shapes()
    params, velocity = [], []
    for layer, in_shape in zip(spec.layers, shapes):
        ps = _param_shapes(layer, in_shape)
        if ps is None:
            params.append(None)
            velocity.append(None)
        else:
            params.append(
                {"w": rng.normal(0.0, 0.02, ps["w"]), "b": np.zeros(ps["b"], dtype=np.float64)}
            )
            velocity.append(
                {"w": np.zeros(ps["w"], dtype=np.float64), "b": np.zeros(ps["b"], dtype=np.float64)}
            )
    return Network(spec, params, velocity)


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class ForwardState:
    """Everything the backward pass needs, tied to a parameter version."""

    caches: list
    logits: np.ndarray
    probabilities: np.ndarray
    batch_size: int
    relu_slope: float
    step_token: int


def forward(network: Network, batch, mode: str = "eval", relu_slope: float = 1.0, rng=None) -> ForwardState:
    """Run the network on a batch; dropout is active only in train mode.

    Returns a :class:`ForwardState` with per-layer caches, the raw logits
    and the softmax probabilities (rows sum to 1).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = check_batch(batch)
    if tuple(x.shape[1:]) != network.spec.input_shape:
        raise DimensionError(
            f"batch shape {x.shape[1:]} does not match spec input {network.spec.input_shape}"
        )
    training = mode == "train"
    caches = []
    for layer, p in zip(network.spec.layers, network.params):
        if layer.kind == "dense":
            x, cache = L.dense_forward(x, p["w"], p["b"])
        elif layer.kind == "conv1d":
            x, cache = L.conv1d_forward(x, p["w"], p["b"], layer.stride)
        elif layer.kind == "conv2d":
            x, cache = L.conv2d_forward(x, p["w"], p["b"], layer.stride)
        elif layer.kind == "maxpool1d":
            x, cache = L.maxpool1d_forward(x, layer.pool, layer.stride)
        elif layer.kind == "maxpool2d":
            x, cache = L.maxpool2d_forward(x, layer.pool, layer.stride)
        elif layer.kind == "dropout":
            x, cache = L.dropout_forward(x, layer.rate, training, rng)
        elif layer.kind == "flatten":
            x, cache = L.flatten_forward(x)
        else:
            raise ValueError(f"unknown layer kind {layer.kind!r}")
        pre_activation = None
        if getattr(layer, "activation", None) == "relu":
            pre_activation = x
            x = L.scaled_relu(x, relu_slope)
        caches.append((cache, pre_activation))
    logits = x
    return ForwardState(
        caches=caches,
        logits=logits,
        probabilities=L.softmax(logits),
        batch_size=x.shape[0],
        relu_slope=relu_slope,
        step_token=network.step_token,
    )


def _backprop(network: Network, state: ForwardState, grad, want_param_grads: bool):
    """Shared reverse sweep from a gradient seed on the logits."""
    grads = [None] * len(network.spec.layers)
    for idx in range(len(network.spec.layers) - 1, -1, -1):
        layer = network.spec.layers[idx]
        cache, pre_activation = state.caches[idx]
        if pre_activation is not None:
            grad = L.scaled_relu_backward(grad, pre_activation, state.relu_slope)
        p = network.params[idx]
        if layer.kind == "dense":
            grad, gw, gb = L.dense_backward(grad, cache, p["w"])
        elif layer.kind == "conv1d":
            grad, gw, gb = L.conv1d_backward(grad, cache, p["w"])
        elif layer.kind == "conv2d":
            grad, gw, gb = L.conv2d_backward(grad, cache, p["w"])
        elif layer.kind == "maxpool1d":
            grad, gw, gb = L.maxpool1d_backward(grad, cache), None, None
        elif layer.kind == "maxpool2d":
            grad, gw, gb = L.maxpool2d_backward(grad, cache), None, None
        elif layer.kind == "dropout":
            grad, gw, gb = L.dropout_backward(grad, cache), None, None
        elif layer.kind == "flatten":
            grad, gw, gb = L.flatten_backward(grad, cache), None, None
        if want_param_grads and gw is not None:
            grads[idx] = {"w": gw, "b": gb}
    return grad, grads


def backward(network: Network, state: ForwardState, labels, weight_decay: float = 0.0) -> list:
    """Gradients of mean cross-entropy plus (weight_decay / 2) * ||W||^2.

    The L2 term covers weight kernels only, not biases.  ``state`` must come
    from a forward pass over the current parameters.
    """
    if state.step_token != network.step_token:
        raise StateError("forward state is stale: parameters changed since it was computed")
    labels = check_labels(labels, state.batch_size)
    grad = L.cross_entropy_logit_gradient(state.probabilities, labels)
    _, grads = _backprop(network, state, grad, want_param_grads=True)
    if weight_decay:
        for g, p in zip(grads, network.params):
            if g is not None:
                g["w"] += weight_decay * p["w"]
    return grads


def input_gradient_for_logit(network: Network, state: ForwardState, class_index: int) -> np.ndarray:
    """Gradient of one logit (summed over the batch) w.r.t. the input batch."""
    if state.step_token != network.step_token:
        raise StateError("forward state is stale: parameters changed since it was computed")
    seed = np.zeros_like(state.logits)
    seed[:, class_index] = 1.0
    grad, _ = _backprop(network, state, seed, want_param_grads=False)
    return grad


def sgd_step(network: Network, grads: list, config: TrainConfig) -> Network:
    """Classical momentum update: v <- momentum*v + g; w <- w - lr*v."""
    for p, v, g in zip(network.params, network.velocity, grads):
        if p is None:
            continue
        if g is None or g["w"].shape != p["w"].shape or g["b"].shape != p["b"].shape:
            raise DimensionError("gradient shapes do not match parameters")
        v["w"] *= config.momentum
        v["w"] += g["w"]
        v["b"] *= config.momentum
        v["b"] += g["b"]
        p["w"] -= config.learning_rate * v["w"]
        p["b"] -= config.learning_rate * v["b"]
    network.step_token += 1
    return network


def predict_probabilities(network: Network, X, relu_slope: float = 1.0, batch_size: int = 256) -> np.ndarray:
    """Eval-mode class probabilities, batched to bound memory."""
    X = check_batch(X)
    out = []
    for start in range(0, X.shape[0], batch_size):
        state = forward(network, X[start : start + batch_size], "eval", relu_slope)
        out.append(state.probabilities)
    return np.concatenate(out, axis=0)


def evaluate(network: Network, X, y, relu_slope: float = 1.0, batch_size: int = 256):
    """(accuracy, mean cross-entropy) over a dataset, dropout disabled."""
    X = check_batch(X)
    y = check_labels(y, X.shape[0])
    if X.shape[0] == 0:
        raise ValueError("dataset is empty")
    correct = 0
    loss_sum = 0.0
    for start in range(0, X.shape[0], batch_size):
        xb, yb = X[start : start + batch_size], y[start : start + batch_size]
        state = forward(network, xb, "eval", relu_slope)
        correct += int((state.probabilities.argmax(axis=1) == yb).sum())
        loss_sum += L.cross_entropy(state.logits, yb) * xb.shape[0]
    return correct / X.shape[0], loss_sum / X.shape[0]


# ---------------------------------------------------------------------------
# checkpoint I/O


def save_network(network: Network, path) -> None:
    """Write spec + parameters to ``path`` (npz); round-trips bit-exactly."""
    payload = {
        "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
        "spec_json": np.array(network.spec.to_json()),
    }
    for idx, p in enumerate(network.params):
        if p is not None:
            payload[f"layer{idx:03d}_w"] = p["w"]
            payload[f"layer{idx:03d}_b"] = p["b"]
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_network(path) -> Network:
    with np.load(path, allow_pickle=False) as data:
        if "format_version" not in data or "spec_json" not in data:
            raise FormatError("not a network checkpoint (missing header fields)", path=str(path))
        version = int(data["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise FormatError(f"unsupported checkpoint format version {version}", path=str(path))
        spec = NetworkSpec.from_json(str(data["spec_json"]))
        network = init_weights(spec, seed=0)
        for idx, p in enumerate(network.params):
            if p is None:
                continue
            w, b = data[f"layer{idx:03d}_w"], data[f"layer{idx:03d}_b"]
            if w.shape != p["w"].shape or b.shape != p["b"].shape:
                raise FormatError(f"checkpoint arrays for layer {idx} have wrong shape", path=str(path))
            p["w"][:] = w
            p["b"][:] = b
        network.reset_velocity()
        network.step_token += 1
    return network
