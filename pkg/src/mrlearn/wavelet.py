"""Multi-level orthonormal Haar wavelet transforms, 1D and 2D.

Conventions fixed by this module (callers rely on them):

* Orthonormal normalisation: the 1/sqrt(2) factor is applied in both the
  analysis and synthesis direction, so coefficient energy equals signal
  energy and the inverse is the transpose.
* 1D inputs must be divisible by ``2**levels``; 2D inputs are zero-padded
  at the high end of each odd axis, per level, and cropped on inverse.
* 2D separable order is rows first, then columns.  Band labels: LL is
  low-pass in both directions, LH is low-pass vertically / high-pass
  horizontally, HL the opposite, HH high-pass in both.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .validation import check_image_2d, check_positive_int, check_signal_1d, require_divisible

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Analysis filter pair used throughout; kept behind this constant so another
# orthogonal basis could be swapped in later without touching call sites.
HAAR_LOW = np.array([_INV_SQRT2, _INV_SQRT2])
HAAR_HIGH = np.array([_INV_SQRT2, -_INV_SQRT2])


@dataclass(frozen=True)
class WaveletPyramid:
    """Multi-level 1D decomposition.

    ``details`` is ordered finest first: ``details[0]`` has length
    ``original_len / 2``, ``details[j]`` has length ``original_len / 2**(j+1)``,
    and ``approx`` has length ``original_len / 2**levels``.
    """

    approx: np.ndarray
    details: tuple
    original_len: int
    levels: int

    def energy(self) -> float:
        total = float(np.sum(self.approx**2))
        for d in self.details:
            total += float(np.sum(d**2))
        return total


@dataclass(frozen=True)
class SubbandTriple:
    """The three oriented detail bands of one 2D decomposition level."""

    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


@dataclass(frozen=True)
class WaveletPyramid2D:
    """Multi-level 2D decomposition; ``details`` ordered finest first."""

    approx: np.ndarray
    details: tuple
    original_shape: tuple
    levels: int

    def energy(self) -> float:
        total = float(np.sum(self.approx**2))
        for t in self.details:
            total += float(np.sum(t.lh**2) + np.sum(t.hl**2) + np.sum(t.hh**2))
        return total


def _analysis_step_1d(x: np.ndarray):
    approx = (x[0::2] + x[1::2]) * _INV_SQRT2
    detail = (x[0::2] - x[1::2]) * _INV_SQRT2
    return approx, detail


def _synthesis_step_1d(approx: np.ndarray, detail: np.ndarray) -> np.ndarray:
    out = np.empty(2 * approx.shape[0], dtype=np.float64)
    out[0::2] = (approx + detail) * _INV_SQRT2
    out[1::2] = (approx - detail) * _INV_SQRT2
    return out


def dwt1d(signal, levels: int) -> WaveletPyramid:
    """Decompose a 1D signal into ``levels`` Haar levels.

    The signal length must be divisible by ``2**levels``.
    """
    x = check_signal_1d(signal)
    levels = check_positive_int(levels, "levels")
    require_divisible(x.shape[0], 2**levels)
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = _analysis_step_1d(approx)
        details.append(detail)
    return WaveletPyramid(approx=approx, details=tuple(details), original_len=x.shape[0], levels=levels)


def idwt1d(pyramid: WaveletPyramid) -> np.ndarray:
    """Invert :func:`dwt1d`; exact up to floating-point round-off."""
    expected = pyramid.original_len >> pyramid.levels
    if pyramid.approx.ndim != 1 or pyramid.approx.shape[0] != expected:
        raise DimensionError(
            f"approximation has length {pyramid.approx.shape}, expected ({expected},)"
        )
    x = pyramid.approx
    for j in range(pyramid.levels - 1, -1, -1):
        detail = pyramid.details[j]
        if detail.shape != x.shape:
            raise DimensionError(
                f"detail at depth {j + 1} has shape {detail.shape}, expected {x.shape}"
            )
        x = _synthesis_step_1d(x, detail)
    return x


def _pad_even_2d(x: np.ndarray) -> np.ndarray:
    pad_r = x.shape[0] % 2
    pad_c = x.shape[1] % 2
    if pad_r or pad_c:
        x = np.pad(x, ((0, pad_r), (0, pad_c)))
    return x


def _analysis_step_2d(x: np.ndarray):
    x = _pad_even_2d(x)
    # rows first: each row splits into low/high halves along the column axis
    low_c = (x[:, 0::2] + x[:, 1::2]) * _INV_SQRT2
    high_c = (x[:, 0::2] - x[:, 1::2]) * _INV_SQRT2
    ll = (low_c[0::2, :] + low_c[1::2, :]) * _INV_SQRT2
    hl = (low_c[0::2, :] - low_c[1::2, :]) * _INV_SQRT2
    lh = (high_c[0::2, :] + high_c[1::2, :]) * _INV_SQRT2
    hh = (high_c[0::2, :] - high_c[1::2, :]) * _INV_SQRT2
    return ll, SubbandTriple(lh=lh, hl=hl, hh=hh)


def _synthesis_step_2d(ll, triple: SubbandTriple, out_shape) -> np.ndarray:
    rows2 = 2 * ll.shape[0]
    low_c = np.empty((rows2, ll.shape[1]), dtype=np.float64)
    low_c[0::2, :] = (ll + triple.hl) * _INV_SQRT2
    low_c[1::2, :] = (ll - triple.hl) * _INV_SQRT2
    high_c = np.empty((rows2, ll.shape[1]), dtype=np.float64)
    high_c[0::2, :] = (triple.lh + triple.hh) * _INV_SQRT2
    high_c[1::2, :] = (triple.lh - triple.hh) * _INV_SQRT2
    x = np.empty((rows2, 2 * ll.shape[1]), dtype=np.float64)
    x[:, 0::2] = (low_c + high_c) * _INV_SQRT2
    x[:, 1::2] = (low_c - high_c) * _INV_SQRT2
    return x[: out_shape[0], : out_shape[1]]


def level_shapes_2d(shape, levels: int) -> list:
    """Pre-pad input shape of every level: index 0 is the original shape,
    index j is the shape of the level-j bands (and of LL^j)."""
    shapes = [tuple(shape)]
    for _ in range(levels):
        r, c = shapes[-1]
        shapes.append(((r + 1) // 2, (c + 1) // 2))
    return shapes


def dwt2d(image, levels: int) -> WaveletPyramid2D:
    """Decompose a 2D image into ``levels`` Haar levels.

    Odd axes are zero-padded at the high end before each level; the inverse
    crops back, so any shape is accepted.
    """
    x = check_image_2d(image)
    levels = check_positive_int(levels, "levels")
    details = []
    ll = x
    for _ in range(levels):
        ll, triple = _analysis_step_2d(ll)
        details.append(triple)
    return WaveletPyramid2D(approx=ll, details=tuple(details), original_shape=x.shape, levels=levels)


def idwt2d(pyramid: WaveletPyramid2D) -> np.ndarray:
    """Invert :func:`dwt2d`, cropping back to ``original_shape``."""
    shapes = level_shapes_2d(pyramid.original_shape, pyramid.levels)
    if tuple(pyramid.approx.shape) != shapes[pyramid.levels]:
        raise DimensionError(
            f"approximation has shape {pyramid.approx.shape}, expected {shapes[pyramid.levels]}"
        )
    x = pyramid.approx
    for j in range(pyramid.levels - 1, -1, -1):
        triple = pyramid.details[j]
        band_shape = shapes[j + 1]
        for name, band in (("LH", triple.lh), ("HL", triple.hl), ("HH", triple.hh)):
            if tuple(band.shape) != band_shape:
                raise DimensionError(
                    f"{name} band at depth {j + 1} has shape {band.shape}, expected {band_shape}"
                )
        x = _synthesis_step_2d(x, triple, shapes[j])
    return x
