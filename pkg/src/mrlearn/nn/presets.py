"""Built-in network architectures.

Two presets ship with the toolkit:

* ``fsdd-samplecnn`` -- a raw-waveform 1D CNN for spoken-digit audio:
  ten Conv1D(kernel 2)/MaxPool blocks, one kernel-1 Conv1D, then two dense
  layers.  2,232,842 parameters at input (16000, 1) with 10 classes.
* ``esc10-piczak-variant`` -- a compact spectrogram 2D CNN: six Conv2D
  layers (3x3 then 2x2s) with max pooling after every pair, then dense
  1000/500/500 with dropout before the 10-way output.  Pooling stride
  defaults to 2; ``pool_stride=1`` selects the overlapping-pool variant.
"""

from __future__ import annotations

from ..errors import ConfigError
from .network import Conv1D, Conv2D, Dense, Dropout, Flatten, MaxPool1D, MaxPool2D, NetworkSpec


def waveform_cnn_spec(input_length: int = 16000, num_classes: int = 10) -> NetworkSpec:
    layers = []
    for filters in (128, 128, 128, 256, 256, 256, 256, 256, 256, 512):
        layers.append(Conv1D(filters=filters, kernel=2))
        layers.append(MaxPool1D(pool=2, stride=2))
    layers.append(Conv1D(filters=512, kernel=1))
    layers.append(Flatten())
    layers.append(Dense(units=128))
    layers.append(Dense(units=num_classes, activation="linear"))
    return NetworkSpec(tuple(layers), (input_length, 1), num_classes)


def spectrogram_cnn_spec(
    input_shape=(60, 41, 1), num_classes: int = 10, pool_stride: int = 2
) -> NetworkSpec:
    pool = MaxPool2D(pool=(2, 2), stride=(pool_stride, pool_stride))
    layers = [
        Conv2D(filters=80, kernel=(3, 3)),
        Conv2D(filters=80, kernel=(2, 2)),
        pool,
        Conv2D(filters=80, kernel=(2, 2)),
        Conv2D(filters=80, kernel=(2, 2)),
        pool,
        Conv2D(filters=80, kernel=(2, 2)),
        Conv2D(filters=80, kernel=(2, 2)),
        pool,
        Flatten(),
        Dense(units=1000),
        Dense(units=500),
        Dense(units=500),
        Dropout(rate=0.5),
        Dense(units=num_classes, activation="linear"),
    ]
    return NetworkSpec(tuple(layers), tuple(input_shape), num_classes)


PRESETS = {
    "fsdd-samplecnn": waveform_cnn_spec,
    "esc10-piczak-variant": spectrogram_cnn_spec,
}


def build_preset(name: str, **overrides) -> NetworkSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown network preset {name!r}; available: {sorted(PRESETS)}") from None
    return factory(**overrides)
