from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float32


class Tensor:
    """An array with an optional gradient buffer of the same shape."""

    __slots__ = ("values", "grad")

    def __init__(self, values, grad=None, dtype=None):
        if dtype is None:
            dt = getattr(values, "dtype", None)
            dtype = dt if dt is not None and np.issubdtype(dt, np.floating) else DEFAULT_DTYPE
        self.values = np.ascontiguousarray(values, dtype=dtype)
        if grad is not None and np.shape(grad) != self.values.shape:
            raise ValueError(f"grad shape {np.shape(grad)} != values shape {self.values.shape}")
        self.grad = grad

    @property
    def shape(self):
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def size(self):
        return self.values.size

    def zero_grad(self):
        self.grad = np.zeros_like(self.values)

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.values.dtype)
        else:
            self.grad += g

    def astype(self, dtype):
        return Tensor(self.values.astype(dtype), None if self.grad is None else self.grad.astype(dtype))

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"
