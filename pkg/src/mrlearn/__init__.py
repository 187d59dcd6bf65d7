"""mrlearn: coarse-to-fine wavelet curriculum training for small CNNs,
with a noise/adversarial robustness evaluation harness.

The package splits into a functional core (wavelet transforms, resolution
ladders, a float64 network engine, phased training, preprocessing, attacks)
plus sklearn-style estimators and a batch-experiment CLI on top.
"""

from . import curriculum, datasets, multires, nn, robustness, signalprep, wavelet
from .curriculum import early_stop_check, phase_relu_slope, plan_phases, train_multiresolution, train_network
from .estimators import CoarseResolution, MultiresolutionCNN
from .multires import build_curriculum_dataset, build_resolution_1d, build_resolution_2d
from .robustness import (
    add_impulsive_noise,
    attack_success_rate,
    deepfool,
    multires_swap_attack,
    one_pixel_attack,
    robustness_rho,
)
from .wavelet import dwt1d, dwt2d, idwt1d, idwt2d

__version__ = "0.1.0"

__all__ = [
    "CoarseResolution",
    "MultiresolutionCNN",
    "add_impulsive_noise",
    "attack_success_rate",
    "build_curriculum_dataset",
    "build_resolution_1d",
    "build_resolution_2d",
    "curriculum",
    "datasets",
    "deepfool",
    "dwt1d",
    "dwt2d",
    "early_stop_check",
    "idwt1d",
    "idwt2d",
    "multires",
    "multires_swap_attack",
    "nn",
    "one_pixel_attack",
    "phase_relu_slope",
    "plan_phases",
    "robustness",
    "robustness_rho",
    "signalprep",
    "train_multiresolution",
    "train_network",
    "wavelet",
]
