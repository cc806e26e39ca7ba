"""Differentiable building blocks, all in float64.

Every op accepts an optional leading batch axis.  Backward functions take the
upstream gradient and return gradients for the op's inputs and parameters.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DomainError, ShapeError

LOG_CLAMP = 1e-12


def _batched(x: np.ndarray, ndim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == ndim:
        return x[None], True
    if x.ndim == ndim + 1:
        return x, False
    raise ShapeError(f"expected {ndim}-D input (or batch of them), got shape {x.shape}")


def _patches(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """[N, C, H, W] -> [N, H', W', C * kh * kw] (copy)."""
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # N, C, H', W', kh, kw
    n, c, ho, wo = win.shape[:4]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho, wo, c * kh * kw)


def conv2d_valid(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Cross-correlation without padding, stride 1.

    ``x`` is ``[C_in, H, W]`` (or ``[N, C_in, H, W]``), ``kernels`` is
    ``[C_out, C_in, kh, kw]``; the result is ``[C_out, H - kh + 1, W - kw + 1]``.
    """
    xb, single = _batched(x, 3)
    c_out, c_in, kh, kw = kernels.shape
    if xb.shape[1] != c_in:
        raise ShapeError(f"input has {xb.shape[1]} channels, kernels expect {c_in}")
    if kh > xb.shape[2] or kw > xb.shape[3]:
        raise ShapeError(f"kernel {kh}x{kw} larger than input {xb.shape[2]}x{xb.shape[3]}")
    if bias.shape != (c_out,):
        raise ShapeError(f"bias shape {bias.shape} != ({c_out},)")
    cols = _patches(xb, kh, kw)
    out = cols @ kernels.reshape(c_out, -1).T + bias  # N, H', W', C_out
    out = out.transpose(0, 3, 1, 2)
    return out[0] if single else out


def conv2d_valid_backward(x: np.ndarray, kernels: np.ndarray, grad_out: np.ndarray,
                          need_input_grad: bool = True):
    """Gradients of :func:`conv2d_valid` w.r.t. input, kernels and bias."""
    xb, single = _batched(x, 3)
    gb = grad_out[None] if single else grad_out
    c_out, c_in, kh, kw = kernels.shape
    n, _, ho, wo = gb.shape
    g = gb.transpose(0, 2, 3, 1).reshape(-1, c_out)  # N*H'*W', C_out
    cols = _patches(xb, kh, kw).reshape(-1, c_in * kh * kw)
    d_kernels = (g.T @ cols).reshape(kernels.shape)
    d_bias = g.sum(axis=0)
    d_x = None
    if need_input_grad:
        dcols = (g @ kernels.reshape(c_out, -1)).reshape(n, ho, wo, c_in, kh, kw)
        d_x = np.zeros_like(xb)
        for i in range(kh):
            for j in range(kw):
                d_x[:, :, i:i + ho, j:j + wo] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        if single:
            d_x = d_x[0]
    return d_x, d_kernels, d_bias


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map ``W x + b`` with ``W`` of shape ``[m, n]``."""
    x = np.asarray(x, dtype=np.float64)
    m, n = weights.shape
    if x.shape[-1] != n or bias.shape != (m,):
        raise ShapeError(f"dense {weights.shape} with bias {bias.shape} cannot take input {x.shape}")
    return x @ weights.T + bias


def dense_backward(x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray):
    xb = np.atleast_2d(x)
    gb = np.atleast_2d(grad_out)
    d_x = grad_out @ weights
    return d_x, gb.T @ xb, gb.sum(axis=0)


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


def relu_backward(t: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (t > 0)


def softmax(t: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over the last axis."""
    z = t - np.max(t, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability ``rate``, else ``1 / (1 - rate)``."""
    if not 0 <= rate < 1:
        raise DomainError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout(t: np.ndarray, rate: float = 0.6, rng: np.random.Generator | None = None,
            training: bool = False) -> np.ndarray:
    if not 0 <= rate < 1:
        raise DomainError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0:
        return t
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    return t * dropout_mask(t.shape, rate, rng)


def cross_entropy(probs: np.ndarray, label_index) -> tuple[float | np.ndarray, np.ndarray]:
    """Categorical cross-entropy and its gradient w.r.t. the pre-softmax logits.

    Works on a single distribution or a batch; the gradient is
    ``probs - onehot(label)`` per example (not averaged).
    """
    probs = np.asarray(probs, dtype=np.float64)
    pb = np.atleast_2d(probs)
    labels = np.atleast_1d(np.asarray(label_index))
    k = pb.shape[-1]
    if labels.shape[0] != pb.shape[0] or np.any((labels < 0) | (labels >= k)) \
            or not np.issubdtype(labels.dtype, np.integer):
        raise DomainError(f"label index {label_index!r} invalid for {k} classes")
    rows = np.arange(pb.shape[0])
    loss = -np.log(np.maximum(pb[rows, labels], LOG_CLAMP))
    grad = pb.copy()
    grad[rows, labels] -= 1.0
    if probs.ndim == 1:
        return float(loss[0]), grad[0]
    return loss, grad
