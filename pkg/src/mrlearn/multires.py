"""Resolution ladders: same-size smoothed versions of signals and images.

A "resolution version" with index ``i`` keeps the dimensions of the original
sample but has detail content progressively removed:

* 1D, index 1: the original signal.  Index ``i > 1``: decompose ``i - 1``
  levels, zero every detail band, reconstruct.
* 2D, index 1: the original image.  Odd index ``2k + 1``: decompose ``k``
  levels, zero all three detail bands at every level, reconstruct.  Even
  index ``2k``: same, except the two oriented bands at the deepest level
  (LH, HL) are kept and only the diagonal band (HH) is zeroed there --
  an intermediate step between depths ``k - 1`` and ``k``.

Multichannel inputs (trailing channel axis) are transformed per channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .validation import as_float_array, check_positive_int
from .wavelet import dwt1d, dwt2d, idwt1d, idwt2d, SubbandTriple, WaveletPyramid, WaveletPyramid2D

KIND_ORIGINAL = "original"
KIND_FULL_ZEROED = "full-detail-zeroed"
KIND_HH_ZEROED = "hh-only-zeroed"


@dataclass(frozen=True)
class ResolutionVersion:
    """One rung of the ladder; ``data`` has the shape of the original input."""

    index: int
    data: np.ndarray
    kind: str
    depth: int


def _zeroed_1d(signal: np.ndarray, depth: int) -> np.ndarray:
    pyr = dwt1d(signal, depth)
    zeros = tuple(np.zeros_like(d) for d in pyr.details)
    return idwt1d(WaveletPyramid(pyr.approx, zeros, pyr.original_len, pyr.levels))


def _per_channel(x: np.ndarray, spatial_ndim: int, fn) -> np.ndarray:
    """Apply ``fn`` over the leading spatial axes, per trailing channel."""
    if x.ndim == spatial_ndim:
        return fn(x)
    if x.ndim != spatial_ndim + 1:
        raise DimensionError(
            f"expected {spatial_ndim}D data with optional channel axis, got shape {x.shape}"
        )
    out = np.empty_like(x, dtype=np.float64)
    for c in range(x.shape[-1]):
        out[..., c] = fn(x[..., c])
    return out


def build_resolution_1d(signal, index: int) -> ResolutionVersion:
    """Build resolution version ``index`` of a 1D signal (channels allowed).

    ``index == 1`` returns the signal unchanged; ``index > 1`` requires the
    length to be divisible by ``2**(index - 1)``.
    """
    x = as_float_array(signal, "signal")
    index = check_positive_int(index, "index")
    if index == 1:
        return ResolutionVersion(index=1, data=x.copy(), kind=KIND_ORIGINAL, depth=0)
    depth = index - 1
    data = _per_channel(x, 1, lambda ch: _zeroed_1d(ch, depth))
    return ResolutionVersion(index=index, data=data, kind=KIND_FULL_ZEROED, depth=depth)


def _coarse_2d(image: np.ndarray, depth: int, keep_oriented_at_deepest: bool) -> np.ndarray:
    pyr = dwt2d(image, depth)
    bands = []
    for j, triple in enumerate(pyr.details):
        deepest = j == depth - 1
        if keep_oriented_at_deepest and deepest:
            bands.append(SubbandTriple(lh=triple.lh, hl=triple.hl, hh=np.zeros_like(triple.hh)))
        else:
            bands.append(
                SubbandTriple(
                    lh=np.zeros_like(triple.lh),
                    hl=np.zeros_like(triple.hl),
                    hh=np.zeros_like(triple.hh),
                )
            )
    return idwt2d(WaveletPyramid2D(pyr.approx, tuple(bands), pyr.original_shape, pyr.levels))


def build_resolution_2d(image, index: int) -> ResolutionVersion:
    """Build resolution version ``index`` of a 2D image (channels allowed)."""
    x = as_float_array(image, "image")
    index = check_positive_int(index, "index")
    if index == 1:
        return ResolutionVersion(index=1, data=x.copy(), kind=KIND_ORIGINAL, depth=0)
    depth = index // 2 if index % 2 == 0 else (index - 1) // 2
    keep_oriented = index % 2 == 0
    data = _per_channel(x, 2, lambda ch: _coarse_2d(ch, depth, keep_oriented))
    kind = KIND_HH_ZEROED if keep_oriented else KIND_FULL_ZEROED
    return ResolutionVersion(index=index, data=data, kind=kind, depth=depth)


def build_resolution(sample, index: int, dimensionality: str) -> ResolutionVersion:
    if dimensionality == "1D":
        return build_resolution_1d(sample, index)
    if dimensionality == "2D":
        return build_resolution_2d(sample, index)
    raise ValueError(f"dimensionality must be '1D' or '2D', got {dimensionality!r}")


def build_curriculum_dataset(samples, k_levels: int, dimensionality: str) -> list:
    """Build the full ladder for a dataset, ordered coarsest first.

    ``samples`` is an array whose first axis indexes samples (or a list of
    equally shaped arrays).  Returns ``k_levels`` ResolutionVersion entries
    whose ``data`` stacks the per-sample transforms; the last entry (index 1)
    is identical to the input.
    """
    k_levels = check_positive_int(k_levels, "k_levels")
    if isinstance(samples, np.ndarray):
        stack = as_float_array(samples, "samples")
    else:
        samples = list(samples)
        if not samples:
            raise DimensionError("samples is empty")
        shapes = {np.asarray(s).shape for s in samples}
        if len(shapes) != 1:
            raise DimensionError(f"samples have heterogeneous shapes: {sorted(shapes)}")
        stack = np.stack([as_float_array(s, "sample") for s in samples])
    if stack.shape[0] == 0:
        raise DimensionError("samples is empty")

    versions = []
    for index in range(k_levels, 0, -1):
        per_sample = [build_resolution(stack[n], index, dimensionality) for n in range(stack.shape[0])]
        versions.append(
            ResolutionVersion(
                index=index,
                data=np.stack([v.data for v in per_sample]),
                kind=per_sample[0].kind,
                depth=per_sample[0].depth,
            )
        )
    return versions
