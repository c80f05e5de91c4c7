"""Stateful layers built on :mod:`.functional`.

A layer keeps the cache of its last forward pass; ``backward`` adds the
parameter gradients into each :class:`Tensor`'s ``grad`` and returns the
gradient with respect to the layer input.
"""

from __future__ import annotations

import math

import numpy as np

from . import functional as F
from .tensor import Tensor


class Module:
    training = True

    def children(self):
        return []

    def named_parameters(self, prefix=""):
        for name, child in self.children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix=""):
        for name, child in self.children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self):
        return [t for _, t in self.named_parameters()]

    def modules(self):
        """This module and every module reachable from its attributes."""
        yield self
        for v in vars(self).values():
            items = v if isinstance(v, (list, tuple)) else (v,)
            for it in items:
                if isinstance(it, tuple):
                    it = it[-1]
                if isinstance(it, Module):
                    yield from it.modules()

    def train(self, mode=True):
        self.training = mode
        for _, child in self.children():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def astype(self, dtype):
        for _, t in list(self.named_parameters()) + list(self.named_buffers()):
            t.values = t.values.astype(dtype)
            if t.grad is not None:
                t.grad = t.grad.astype(dtype)
        return self

    def __call__(self, x):
        return self.forward(x)


class Conv2d(Module):
    def __init__(self, cin, cout, k=3, stride=1, padding=None, bias=False, rng=None):
        rng = rng or np.random.default_rng(0)
        self.stride = stride
        self.padding = k // 2 if padding is None else padding
        # Kaiming fan-in normal
        std = math.sqrt(2.0 / (k * k * cin))
        self.weight = Tensor(rng.normal(0.0, std, (k, k, cin, cout)).astype(np.float32))
        self.bias = Tensor(np.zeros(cout, np.float32)) if bias else None
        self._cache = None

    def named_parameters(self, prefix=""):
        yield prefix + "weight", self.weight
        if self.bias is not None:
            yield prefix + "bias", self.bias

    def forward(self, x):
        b = None if self.bias is None else self.bias.values
        out, self._cache = F.conv2d_forward(x, self.weight.values, b, self.stride, self.padding)
        return out

    def backward(self, dout):
        dx, dw, db = F.conv2d_backward(dout, self._cache)
        self.weight.accumulate(dw)
        if self.bias is not None:
            self.bias.accumulate(db)
        return dx


class BatchNorm2d(Module):
    def __init__(self, c, momentum=0.1, eps=1e-5):
        self.gamma = Tensor(np.ones(c, np.float32))
        self.beta = Tensor(np.zeros(c, np.float32))
        self.running_mean = Tensor(np.zeros(c, np.float32))
        self.running_var = Tensor(np.ones(c, np.float32))
        self.momentum, self.eps = momentum, eps
        self._cache = None

    def named_parameters(self, prefix=""):
        yield prefix + "gamma", self.gamma
        yield prefix + "beta", self.beta

    def named_buffers(self, prefix=""):
        yield prefix + "running_mean", self.running_mean
        yield prefix + "running_var", self.running_var

    def forward(self, x):
        out, self._cache = F.batchnorm_forward(
            x, self.gamma.values, self.beta.values, self.running_mean.values, self.running_var.values,
            self.training, self.momentum, self.eps)
        return out

    def backward(self, dout):
        dx, dg, db = F.batchnorm_backward(dout, self._cache)
        self.gamma.accumulate(dg)
        self.beta.accumulate(db)
        return dx


class ReLU(Module):
    def forward(self, x):
        out, self._mask = F.relu_forward(x)
        return out

    def backward(self, dout):
        return F.relu_backward(dout, self._mask)


class GlobalAvgPool(Module):
    def forward(self, x):
        out, self._shape = F.global_avg_pool_forward(x)
        return out

    def backward(self, dout):
        return F.global_avg_pool_backward(dout, self._shape)


class Linear(Module):
    def __init__(self, fin, fout, rng=None):
        rng = rng or np.random.default_rng(0)
        self.weight = Tensor(rng.normal(0.0, math.sqrt(2.0 / fin), (fin, fout)).astype(np.float32))
        self.bias = Tensor(np.zeros(fout, np.float32))

    def named_parameters(self, prefix=""):
        yield prefix + "weight", self.weight
        yield prefix + "bias", self.bias

    def forward(self, x):
        out, self._cache = F.linear_forward(x, self.weight.values, self.bias.values)
        return out

    def backward(self, dout):
        dx, dw, db = F.linear_backward(dout, self._cache)
        self.weight.accumulate(dw)
        self.bias.accumulate(db)
        return dx


class BasicBlock(Module):
    """conv-bn-relu-conv-bn plus shortcut, then relu.

    The shortcut is the identity unless the block changes resolution or
    width, in which case it is a 1x1 convolution followed by batch norm.
    """

    def __init__(self, cin, cout, stride=1, rng=None):
        rng = rng or np.random.default_rng(0)
        self.conv1 = Conv2d(cin, cout, 3, stride, rng=rng)
        self.bn1 = BatchNorm2d(cout)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(cout, cout, 3, 1, rng=rng)
        self.bn2 = BatchNorm2d(cout)
        self.relu2 = ReLU()
        if stride != 1 or cin != cout:
            self.down_conv = Conv2d(cin, cout, 1, stride, padding=0, rng=rng)
            self.down_bn = BatchNorm2d(cout)
        else:
            self.down_conv = self.down_bn = None

    def children(self):
        out = [("conv1", self.conv1), ("bn1", self.bn1), ("conv2", self.conv2), ("bn2", self.bn2)]
        if self.down_conv is not None:
            out += [("down_conv", self.down_conv), ("down_bn", self.down_bn)]
        return out

    def forward(self, x):
        y = self.relu1(self.bn1(self.conv1(x)))
        y = self.bn2(self.conv2(y))
        s = x if self.down_conv is None else self.down_bn(self.down_conv(x))
        return self.relu2(y + s)

    def backward(self, dout):
        d = self.relu2.backward(dout)
        g = self.relu1.backward(self.conv2.backward(self.bn2.backward(d)))
        dy = self.conv1.backward(self.bn1.backward(g))
        if self.down_conv is None:
            return dy + d
        return dy + self.down_conv.backward(self.down_bn.backward(d))


def residual_block_forward(x, block: BasicBlock):
    return block.forward(x)


def residual_block_backward(dout, block: BasicBlock):
    return block.backward(dout)
