"""Layer kernels as forward/backward function pairs.

Activations are channels-last, ``(N, H, W, C)``; convolution weights are
``(kh, kw, C_in, C_out)``. Every forward returns ``(out, cache)`` and the
matching backward consumes that cache.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import BatchTooSmall, LabelOutOfRange, ShapeMismatch


def _pad(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))


def _windows(xp, k, stride, ho, wo):
    """Copy of every k x k patch, shape (N, Ho, Wo, k, k, C)."""
    n, _, _, c = xp.shape
    sn, sh, sw, sc = xp.strides
    view = as_strided(xp, shape=(n, ho, wo, k, k, c),
                      strides=(sn, sh * stride, sw * stride, sh, sw, sc), writeable=False)
    return np.ascontiguousarray(view)


def _out_size(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def conv2d_forward(x, w, b=None, stride=1, padding=0):
    """Direct cross-correlation with zero padding."""
    if x.ndim != 4 or w.ndim != 4 or w.shape[0] != w.shape[1] or w.shape[2] != x.shape[3]:
        raise ShapeMismatch(f"conv2d: input {x.shape} incompatible with weights {w.shape}")
    if w.shape[0] not in (1, 3):
        raise ShapeMismatch("only 1x1 and 3x3 kernels are supported")
    if b is not None and b.shape != (w.shape[3],):
        raise ShapeMismatch(f"conv2d: bias {b.shape} does not match {w.shape[3]} output channels")
    n, h, wd, c = x.shape
    k, cout = w.shape[0], w.shape[3]
    ho, wo = _out_size(h, k, stride, padding), _out_size(wd, k, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeMismatch("conv2d: output would be empty")
    if k == 1 and padding == 0:
        cols = np.ascontiguousarray(x[:, ::stride, ::stride, :]).reshape(-1, c)
    else:
        cols = _windows(_pad(x, padding), k, stride, ho, wo).reshape(-1, k * k * c)
    out = cols @ w.reshape(-1, cout)
    if b is not None:
        out += b
    cache = (x.shape, cols, w, stride, padding, b is not None)
    return out.reshape(n, ho, wo, cout), cache


def conv2d_backward(dout, cache):
    """Returns ``(dx, dw, db)``; ``db`` is None for bias-free convolutions."""
    xshape, cols, w, stride, padding, has_bias = cache
    n, h, wd, c = xshape
    k, cout = w.shape[0], w.shape[3]
    _, ho, wo, _ = dout.shape
    d2 = dout.reshape(-1, cout)
    dw = (cols.T @ d2).reshape(w.shape)
    db = d2.sum(axis=0) if has_bias else None

    if k == 1 and padding == 0:
        dx = np.zeros(xshape, dtype=dout.dtype)
        dx[:, ::stride, ::stride, :] = (d2 @ w.reshape(c, cout).T).reshape(n, ho, wo, c)
        return dx, dw, db
    if stride == 1:
        # full correlation of dout with the spatially flipped, channel-swapped kernel
        wf = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))
        q = k - 1 - padding
        dcols = _windows(_pad(dout, q), k, 1, h, wd).reshape(-1, k * k * cout)
        return (dcols @ wf.reshape(-1, c)).reshape(xshape), dw, db
    dcols = (d2 @ w.reshape(-1, cout).T).reshape(n, ho, wo, k, k, c)
    dxp = np.zeros((n, h + 2 * padding, wd + 2 * padding, c), dtype=dout.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += dcols[:, :, :, i, j, :]
    if padding:
        dxp = dxp[:, padding:-padding, padding:-padding, :]
    return dxp, dw, db


def _colsum(a2):
    # column sums as a matrix-vector product; much faster than a strided
    # reduction for channels-last data and fixed in order on one thread
    return np.ones(a2.shape[0], dtype=a2.dtype) @ a2


def batchnorm_forward(x, gamma, beta_shift, running_mean, running_var, training=True,
                      momentum=0.1, eps=1e-5):
    """Per-channel batch normalisation; updates the running buffers in place when training."""
    c = x.shape[-1]
    if gamma.shape != (c,) or beta_shift.shape != (c,):
        raise ShapeMismatch(f"batchnorm: {c} channels, gamma {gamma.shape}, shift {beta_shift.shape}")
    x2 = x.reshape(-1, c)
    m = x2.shape[0]
    if training:
        if x.shape[0] < 2:
            raise BatchTooSmall("batch norm needs at least two samples in training mode")
        mean = _colsum(x2) / m
        xc = x2 - mean
        var = _colsum(xc * xc) / m
        inv = 1.0 / np.sqrt(var + eps)
        xhat = xc * inv
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        # unbiased variance for the running estimate
        running_var += momentum * var * (m / max(m - 1, 1))
    else:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x2 - running_mean) * inv
    out = xhat * gamma + beta_shift
    return out.reshape(x.shape), (xhat, inv, gamma, training)


def batchnorm_backward(dout, cache):
    xhat, inv, gamma, training = cache
    d2 = dout.reshape(xhat.shape)
    dgamma = _colsum(d2 * xhat)
    dbeta = _colsum(d2)
    if not training:
        return dout * (gamma * inv), dgamma, dbeta
    m = d2.shape[0]
    dx = (gamma * inv / m) * (m * d2 - dbeta - xhat * dgamma)
    return dx.reshape(dout.shape), dgamma, dbeta


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def global_avg_pool_forward(x):
    return x.mean(axis=(1, 2)), x.shape


def global_avg_pool_backward(dout, shape):
    n, h, w, c = shape
    return np.broadcast_to(dout[:, None, None, :] / (h * w), shape).copy()


def linear_forward(x, w, b):
    if x.ndim != 2 or w.shape[0] != x.shape[1] or b.shape != (w.shape[1],):
        raise ShapeMismatch(f"linear: input {x.shape}, weights {w.shape}, bias {b.shape}")
    return x @ w + b, (x, w)


def linear_backward(dout, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient with respect to the logits."""
    labels = np.asarray(labels)
    b, c = logits.shape
    if labels.shape != (b,):
        raise ShapeMismatch(f"{b} logits rows but labels shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelOutOfRange(f"labels must lie in [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - log_norm
    rows = np.arange(b)
    loss = -logp[rows, labels].mean()
    grad = np.exp(logp)
    grad[rows, labels] -= 1
    grad /= b
    return float(loss), grad
