"""Layer math: forward/backward pairs for every supported layer kind.

Data layout is channels-last: 1D batches are (n, length, channels), 2D
batches are (n, rows, cols, channels).  Convolutions are valid (no padding).
Each forward returns ``(output, cache)``; the matching backward consumes the
cache and returns gradients for the input and for any parameters.  All math
is float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError


def scaled_relu(x, slope: float = 1.0) -> np.ndarray:
    """Rectifier whose positive half is multiplied by ``slope``;
    ``slope == 1`` is the ordinary ReLU."""
    if slope <= 0:
        raise ValueError(f"slope must be positive, got {slope}")
    x = np.asarray(x, dtype=np.float64)
    return slope * np.maximum(x, 0.0)


def scaled_relu_backward(grad_out, x, slope: float) -> np.ndarray:
    return grad_out * (slope * (x > 0))


def softmax(logits) -> np.ndarray:
    """Row-wise softmax, stable for logits up to ~1e308 via max-shift."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits, labels) -> float:
    """Mean negative log-likelihood of integer ``labels`` under ``logits``."""
    logp = log_softmax(logits)
    n = logits.shape[0]
    return float(-logp[np.arange(n), labels].mean())


def cross_entropy_logit_gradient(probabilities, labels) -> np.ndarray:
    n = probabilities.shape[0]
    grad = probabilities.copy()
    grad[np.arange(n), labels] -= 1.0
    return grad / n


# ---------------------------------------------------------------------------
# dense


def dense_forward(x, w, b):
    return x @ w + b, x


def dense_backward(grad_out, cache, w):
    x = cache
    grad_w = x.T @ grad_out
    grad_b = grad_out.sum(axis=0)
    grad_x = grad_out @ w.T
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# conv1d


def _conv1d_cols(x, kernel, stride):
    n, length, cin = x.shape
    out_len = (length - kernel) // stride + 1
    if out_len < 1:
        raise DimensionError(f"conv1d kernel {kernel} does not fit input length {length}")
    windows = np.lib.stride_tricks.sliding_window_view(x, kernel, axis=1)  # (n, L-k+1, cin, k)
    windows = windows[:, ::stride]
    cols = windows.transpose(0, 1, 3, 2).reshape(n, out_len, kernel * cin)
    return cols, out_len


def conv1d_forward(x, w, b, stride: int = 1):
    """``w`` has shape (kernel, cin, cout); output (n, out_len, cout)."""
    kernel, cin, cout = w.shape
    if x.shape[2] != cin:
        raise DimensionError(f"conv1d expects {cin} input channels, got {x.shape[2]}")
    cols, out_len = _conv1d_cols(x, kernel, stride)
    out = cols @ w.reshape(kernel * cin, cout) + b
    return out, (x.shape, cols, stride)


def conv1d_backward(grad_out, cache, w):
    x_shape, cols, stride = cache
    kernel, cin, cout = w.shape
    n, out_len, _ = grad_out.shape
    grad_w = (cols.reshape(-1, kernel * cin).T @ grad_out.reshape(-1, cout)).reshape(w.shape)
    grad_b = grad_out.sum(axis=(0, 1))
    grad_cols = grad_out @ w.reshape(kernel * cin, cout).T  # (n, out_len, k*cin)
    grad_cols = grad_cols.reshape(n, out_len, kernel, cin)
    grad_x = np.zeros(x_shape, dtype=np.float64)
    for t in range(kernel):
        grad_x[:, t : t + stride * out_len : stride, :] += grad_cols[:, :, t, :]
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# conv2d


def _conv2d_cols(x, kh, kw, stride):
    n, rows, cols_in, cin = x.shape
    sr, sc = stride
    out_r = (rows - kh) // sr + 1
    out_c = (cols_in - kw) // sc + 1
    if out_r < 1 or out_c < 1:
        raise DimensionError(f"conv2d kernel ({kh},{kw}) does not fit input {(rows, cols_in)}")
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    windows = windows[:, ::sr, ::sc]  # (n, out_r, out_c, cin, kh, kw)
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n, out_r, out_c, kh * kw * cin)
    return cols, out_r, out_c


def conv2d_forward(x, w, b, stride=(1, 1)):
    """``w`` has shape (kh, kw, cin, cout); output (n, out_r, out_c, cout)."""
    kh, kw, cin, cout = w.shape
    if x.shape[3] != cin:
        raise DimensionError(f"conv2d expects {cin} input channels, got {x.shape[3]}")
    cols, out_r, out_c = _conv2d_cols(x, kh, kw, stride)
    out = cols @ w.reshape(kh * kw * cin, cout) + b
    return out, (x.shape, cols, stride)


def conv2d_backward(grad_out, cache, w):
    x_shape, cols, stride = cache
    kh, kw, cin, cout = w.shape
    n, out_r, out_c, _ = grad_out.shape
    sr, sc = stride
    grad_w = (cols.reshape(-1, kh * kw * cin).T @ grad_out.reshape(-1, cout)).reshape(w.shape)
    grad_b = grad_out.sum(axis=(0, 1, 2))
    grad_cols = grad_out @ w.reshape(kh * kw * cin, cout).T
    grad_cols = grad_cols.reshape(n, out_r, out_c, kh, kw, cin)
    grad_x = np.zeros(x_shape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            grad_x[:, i : i + sr * out_r : sr, j : j + sc * out_c : sc, :] += grad_cols[:, :, :, i, j, :]
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# max pooling


def maxpool1d_forward(x, pool: int = 2, stride: int = 2):
    n, length, cin = x.shape
    out_len = (length - pool) // stride + 1
    if out_len < 1:
        raise DimensionError(f"maxpool1d window {pool} does not fit input length {length}")
    windows = np.lib.stride_tricks.sliding_window_view(x, pool, axis=1)[:, ::stride]
    out = windows.max(axis=-1)
    argmax = windows.argmax(axis=-1)  # (n, out_len, cin)
    return out, (x.shape, argmax, pool, stride)


def maxpool1d_backward(grad_out, cache):
    x_shape, argmax, pool, stride = cache
    n, out_len, cin = grad_out.shape
    grad_x = np.zeros(x_shape, dtype=np.float64)
    starts = np.arange(out_len) * stride
    pos = starts[None, :, None] + argmax  # absolute index of each window max
    n_idx = np.repeat(np.arange(n), out_len * cin)
    c_idx = np.tile(np.arange(cin), n * out_len)
    np.add.at(grad_x, (n_idx, pos.ravel(), c_idx), grad_out.ravel())
    return grad_x


def maxpool2d_forward(x, pool=(2, 2), stride=(2, 2)):
    n, rows, cols_in, cin = x.shape
    ph, pw = pool
    sr, sc = stride
    out_r = (rows - ph) // sr + 1
    out_c = (cols_in - pw) // sc + 1
    if out_r < 1 or out_c < 1:
        raise DimensionError(f"maxpool2d window {pool} does not fit input {(rows, cols_in)}")
    windows = np.lib.stride_tricks.sliding_window_view(x, (ph, pw), axis=(1, 2))[:, ::sr, ::sc]
    flat = windows.reshape(n, out_r, out_c, cin, ph * pw)
    out = flat.max(axis=-1)
    argmax = flat.argmax(axis=-1)  # (n, out_r, out_c, cin)
    return out, (x.shape, argmax, pool, stride)


def maxpool2d_backward(grad_out, cache):
    x_shape, argmax, pool, stride = cache
    n, out_r, out_c, cin = grad_out.shape
    ph, pw = pool
    sr, sc = stride
    row_in_window, col_in_window = np.divmod(argmax, pw)
    r_pos = (np.arange(out_r) * sr)[None, :, None, None] + row_in_window
    c_pos = (np.arange(out_c) * sc)[None, None, :, None] + col_in_window
    grad_x = np.zeros(x_shape, dtype=np.float64)
    n_idx = np.repeat(np.arange(n), out_r * out_c * cin)
    ch_idx = np.tile(np.arange(cin), n * out_r * out_c)
    np.add.at(grad_x, (n_idx, r_pos.ravel(), c_pos.ravel(), ch_idx), grad_out.ravel())
    return grad_x


# ---------------------------------------------------------------------------
# dropout / flatten


def dropout_forward(x, rate: float, training: bool, rng):
    """Inverted dropout: surviving units are scaled by 1/(1-rate) at train
    time so evaluation is a plain identity."""
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(grad_out, mask):
    if mask is None:
        return grad_out
    return grad_out * mask


def flatten_forward(x):
    n = x.shape[0]
    return x.reshape(n, -1), x.shape


def flatten_backward(grad_out, shape):
    return grad_out.reshape(shape)
