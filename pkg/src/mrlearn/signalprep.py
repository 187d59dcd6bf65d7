"""Dataset preprocessing.

1D audio path: crop exact-zero silence, linearly rescale to a fixed length,
normalise amplitude to [-1, 1].  2D audio path: log-mel spectrograms
(Hann window, one-sided power spectrum, HTK mel scale, unnormalised
triangular filters), split into fixed-width overlapping segments, and
recombined at prediction time by probability voting.  Image path:
per-channel mean/std normalisation fit on the training set.

Everything here is a pure function; identical inputs give identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, EmptySignalError
from .validation import as_float_array, check_signal_1d

LOG_FLOOR_EPSILON = 1e-10
DEFAULT_CLIP_LENGTH = 16000


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    label: int | None = None


@dataclass(frozen=True)
class Spectrogram:
    values: np.ndarray  # (mel_bands, frames), log power
    mel_bands: int
    hop: int
    window: int
    label: int | None = None


@dataclass(frozen=True)
class SegmentSet:
    segments: tuple  # each (mel_bands, frames_per_segment)
    clip_id: str
    label: int | None = None


def crop_silence(clip: AudioClip) -> AudioClip:
    """Drop runs of exact zeros at both ends; interior zeros are kept."""
    samples = check_signal_1d(clip.samples, "clip samples")
    nonzero = np.flatnonzero(samples)
    if nonzero.size == 0:
        raise EmptySignalError("clip contains only zeros; nothing left after cropping")
    return replace(clip, samples=samples[nonzero[0] : nonzero[-1] + 1])


def resample_to_length(clip: AudioClip, length: int = DEFAULT_CLIP_LENGTH) -> AudioClip:
    """Stretch or shrink to exactly ``length`` samples by linear interpolation."""
    samples = check_signal_1d(clip.samples, "clip samples")
    if length < 2:
        raise ValueError(f"target length must be >= 2, got {length}")
    if samples.shape[0] == length:
        return replace(clip, samples=samples.copy())
    if samples.shape[0] == 1:
        return replace(clip, samples=np.full(length, samples[0]))
    positions = np.linspace(0.0, samples.shape[0] - 1, length)
    return replace(clip, samples=np.interp(positions, np.arange(samples.shape[0]), samples))


def normalize_amplitude(clip: AudioClip) -> AudioClip:
    """Scale so the largest magnitude is 1; an all-zero clip passes through."""
    samples = check_signal_1d(clip.samples, "clip samples")
    peak = np.abs(samples).max()
    if peak == 0.0:
        return replace(clip, samples=samples.copy())
    return replace(clip, samples=samples / peak)


def preprocess_waveform(clip: AudioClip, length: int = DEFAULT_CLIP_LENGTH) -> AudioClip:
    """Full 1D pipeline: crop, rescale to ``length``, normalise amplitude."""
    return normalize_amplitude(resample_to_length(crop_silence(clip), length))


# ---------------------------------------------------------------------------
# spectrograms


def hz_to_mel(freq):
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, mel_bands: int):
    """Triangular filters on the HTK mel scale from 0 Hz to Nyquist.

    Returns ``(weights, centers)`` where ``weights`` is (mel_bands, n_bins)
    applied to the one-sided power spectrum and ``centers`` are the filter
    peak frequencies in Hz.
    """
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    mel_points = np.linspace(0.0, float(hz_to_mel(sample_rate / 2)), mel_bands + 2)
    hz_points = mel_to_hz(mel_points)
    weights = np.zeros((mel_bands, bin_freqs.shape[0]))
    for band in range(mel_bands):
        left, center, right = hz_points[band : band + 3]
        rising = (bin_freqs - left) / max(center - left, 1e-12)
        falling = (right - bin_freqs) / max(right - center, 1e-12)
        weights[band] = np.clip(np.minimum(rising, falling), 0.0, None)
    return weights, hz_points[1:-1]


def _hann_window(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_count(n_samples: int, window: int, hop: int) -> int:
    return (n_samples - window) // hop + 1


def log_mel_spectrogram(
    clip: AudioClip, window: int = 1024, hop: int = 512, mel_bands: int = 60
) -> Spectrogram:
    """Log-power mel spectrogram; frames cover the clip without centering,
    so the frame count is floor((n - window) / hop) + 1."""
    samples = check_signal_1d(clip.samples, "clip samples")
    if samples.shape[0] < window:
        raise DimensionError(
            f"clip has {samples.shape[0]} samples, shorter than the {window}-sample window"
        )
    n_frames = frame_count(samples.shape[0], window, hop)
    frames = np.lib.stride_tricks.sliding_window_view(samples, window)[::hop][:n_frames]
    spectrum = np.fft.rfft(frames * _hann_window(window), axis=1)
    power = np.abs(spectrum) ** 2
    weights, _ = mel_filterbank(clip.sample_rate, window, mel_bands)
    values = np.log(power @ weights.T + LOG_FLOOR_EPSILON).T  # (mel_bands, frames)
    return Spectrogram(values=values, mel_bands=mel_bands, hop=hop, window=window, label=clip.label)


def segment_spectrogram(
    spec: Spectrogram, frames: int = 41, hop_frames: int = 20, clip_id: str = ""
) -> SegmentSet:
    """Split into windows of ``frames`` columns starting every ``hop_frames``;
    only fully fitting windows are kept, silent ones included."""
    total = spec.values.shape[1]
    if total < frames:
        raise DimensionError(f"spectrogram has {total} frames, needs at least {frames}")
    starts = range(0, total - frames + 1, hop_frames)
    segments = tuple(spec.values[:, s : s + frames].copy() for s in starts)
    return SegmentSet(segments=segments, clip_id=clip_id, label=spec.label)


def probability_vote(segment_probabilities) -> int:
    """Clip-level class: argmax of the mean segment probability vector.
    Ties break toward the lowest class index."""
    probs = as_float_array(list(segment_probabilities), "segment probabilities")
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ValueError("need a nonempty list of per-class probability vectors")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError("each probability vector must sum to 1 (+/- 1e-6)")
    return int(probs.mean(axis=0).argmax())


# ---------------------------------------------------------------------------
# image normalisation


def normalize_images(train, apply_to=None):
    """Per-channel standardisation: statistics from ``train``, applied to
    ``apply_to`` (defaults to the training set itself).

    Accepts (n, rows, cols) or (n, rows, cols, channels).  Returns
    ``(normalized, (mean, std))``; std is floored at 1e-8 so constant
    channels map to zero.
    """
    train = as_float_array(train, "train images")
    if train.ndim not in (3, 4) or train.shape[0] == 0:
        raise DimensionError(f"train images must be (n, rows, cols[, channels]), got {train.shape}")
    target = train if apply_to is None else as_float_array(apply_to, "apply_to images")
    axes = tuple(range(train.ndim - 1)) if train.ndim == 4 else None
    if train.ndim == 4:
        mean = train.mean(axis=axes)
        std = np.maximum(train.std(axis=axes), 1e-8)
    else:
        mean = np.float64(train.mean())
        std = np.float64(max(train.std(), 1e-8))
    return (target - mean) / std, (mean, std)
