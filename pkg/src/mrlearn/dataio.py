"""File ingestion: WAV audio, flat binary image batches, directory layouts.

WAV support covers uncompressed PCM, 8-bit unsigned or 16-bit signed,
mono, little-endian RIFF.  Samples are mapped to [-1, 1].  Parsers raise
:class:`~mrlearn.errors.FormatError` with the byte offset of the problem.

The flat binary image format is one record per image: a single label byte
followed by ``channels * rows * cols`` pixel bytes, channel-major then
row-major.  Pixels are scaled to [0, 1].

Directory layouts:

* audio: a directory of ``.wav`` files named ``<label>_<anything>.wav``
  (the leading integer before the first underscore is the class).
* images: one subdirectory per class (sorted names define the label
  indices), each containing ``.npy`` arrays of one common shape.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .signalprep import AudioClip


def read_wav(path) -> AudioClip:
    """Parse a mono PCM WAV file into an :class:`AudioClip` in [-1, 1]."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12:
        raise FormatError("file too short for a RIFF header", position=0, path=str(path))
    if raw[0:4] != b"RIFF":
        raise FormatError(f"expected 'RIFF' magic, found {raw[0:4]!r}", position=0, path=str(path))
    if raw[8:12] != b"WAVE":
        raise FormatError(f"expected 'WAVE' form type, found {raw[8:12]!r}", position=8, path=str(path))

    fmt = None
    data = None
    offset = 12
    while offset + 8 <= len(raw):
        chunk_id = raw[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, offset + 4)
        body_start = offset + 8
        if body_start + chunk_size > len(raw):
            raise FormatError(
                f"chunk {chunk_id!r} declares {chunk_size} bytes but the file ends early",
                position=offset,
                path=str(path),
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise FormatError("fmt chunk shorter than 16 bytes", position=body_start, path=str(path))
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
        elif chunk_id == b"data":
            data = raw[body_start : body_start + chunk_size]
            data_offset = body_start
        offset = body_start + chunk_size + (chunk_size % 2)  # chunks are word-aligned

    if fmt is None:
        raise FormatError("missing 'fmt ' chunk", position=12, path=str(path))
    if data is None:
        raise FormatError("missing 'data' chunk", position=12, path=str(path))

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise FormatError(f"unsupported audio format code {audio_format} (PCM only)", path=str(path))
    if channels != 1:
        raise FormatError(f"expected mono audio, got {channels} channels", path=str(path))
    if bits == 8:
        samples = (np.frombuffer(data, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 16:
        if len(data) % 2:
            raise FormatError("16-bit data chunk has odd length", position=data_offset, path=str(path))
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    else:
        raise FormatError(f"unsupported bit depth {bits} (8 or 16 only)", path=str(path))
    return AudioClip(samples=samples, sample_rate=sample_rate)


def write_wav(path, samples, sample_rate: int, bits: int = 16) -> None:
    """Write a mono PCM WAV file from samples in [-1, 1]."""
    samples = np.asarray(samples, dtype=np.float64)
    if bits == 16:
        pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2").tobytes()
        block_align, byte_rate = 2, sample_rate * 2
    elif bits == 8:
        pcm = np.clip(np.round(samples * 128.0) + 128.0, 0, 255).astype(np.uint8).tobytes()
        block_align, byte_rate = 1, sample_rate
    else:
        raise ValueError(f"bits must be 8 or 16, got {bits}")
    fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, byte_rate, block_align, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def read_wav_directory(root):
    """Load every ``.wav`` under ``root`` (sorted by filename); labels come
    from the integer prefix before the first underscore."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    clips = []
    paths = sorted(root.glob("*.wav"))
    if not paths:
        raise DataError(f"no .wav files found in {root}")
    for p in paths:
        stem = p.stem.split("_", 1)[0]
        try:
            label = int(stem)
        except ValueError:
            raise DataError(f"{p.name}: cannot parse class label from filename prefix {stem!r}") from None
        clip = read_wav(p)
        clips.append(AudioClip(samples=clip.samples, sample_rate=clip.sample_rate, label=label))
    return clips


def read_image_batch(path, rows: int = 32, cols: int = 32, channels: int = 3):
    """Read a flat binary image batch; returns (images, labels) with images
    (n, rows, cols, channels) scaled to [0, 1]."""
    path = Path(path)
    raw = path.read_bytes()
    record = 1 + rows * cols * channels
    if len(raw) == 0 or len(raw) % record != 0:
        raise FormatError(
            f"file size {len(raw)} is not a positive multiple of the {record}-byte record",
            position=len(raw) - (len(raw) % record) if raw else 0,
            path=str(path),
        )
    n = len(raw) // record
    data = np.frombuffer(raw, dtype=np.uint8).reshape(n, record)
    labels = data[:, 0].astype(np.int64)
    pixels = data[:, 1:].reshape(n, channels, rows, cols)
    images = pixels.transpose(0, 2, 3, 1).astype(np.float64) / 255.0
    return images, labels


def write_image_batch(path, images, labels) -> None:
    """Inverse of :func:`read_image_batch` for images already in [0, 1]."""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    n, rows, cols, channels = images.shape
    pixels = np.clip(np.round(images * 255.0), 0, 255).astype(np.uint8)
    records = np.empty((n, 1 + rows * cols * channels), dtype=np.uint8)
    records[:, 0] = labels.astype(np.uint8)
    records[:, 1:] = pixels.transpose(0, 3, 1, 2).reshape(n, -1)
    Path(path).write_bytes(records.tobytes())


def read_image_directory(root):
    """Load a class-per-subdirectory tree of ``.npy`` arrays.

    Returns (images, labels, class_names); labels index into the sorted
    subdirectory names.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataError(f"no class subdirectories found in {root}")
    images, labels = [], []
    for label, class_dir in enumerate(class_dirs):
        files = sorted(class_dir.glob("*.npy"))
        if not files:
            raise DataError(f"class directory {class_dir} contains no .npy files")
        for f in files:
            arr = np.load(f, allow_pickle=False).astype(np.float64)
            images.append(arr)
            labels.append(label)
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise DataError(f"images have heterogeneous shapes: {sorted(shapes)}")
    return np.stack(images), np.asarray(labels, dtype=np.int64), [d.name for d in class_dirs]
