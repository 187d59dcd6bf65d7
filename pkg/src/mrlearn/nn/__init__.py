"""Minimal float64 tensor network engine: layers, backprop, SGD, presets."""

from .layers import cross_entropy, log_softmax, scaled_relu, softmax
from .network import (
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    ForwardState,
    MaxPool1D,
    MaxPool2D,
    Network,
    NetworkSpec,
    TrainConfig,
    backward,
    evaluate,
    forward,
    init_weights,
    input_gradient_for_logit,
    load_network,
    predict_probabilities,
    save_network,
    sgd_step,
)
from .presets import PRESETS, build_preset, spectrogram_cnn_spec, waveform_cnn_spec

__all__ = [
    "Conv1D",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "ForwardState",
    "MaxPool1D",
    "MaxPool2D",
    "Network",
    "NetworkSpec",
    "PRESETS",
    "TrainConfig",
    "backward",
    "build_preset",
    "cross_entropy",
    "evaluate",
    "forward",
    "init_weights",
    "input_gradient_for_logit",
    "load_network",
    "log_softmax",
    "predict_probabilities",
    "save_network",
    "scaled_relu",
    "sgd_step",
    "softmax",
    "spectrogram_cnn_spec",
    "waveform_cnn_spec",
]
