"""Optimisers and the step learning-rate schedule.

Momentum follows the common deep-learning convention ``v = mu * v + g``,
``w -= lr * v`` (no dampening, not Nesterov).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    kind: str
    lr: float
    momentum: float = 0.0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    buffers: list = field(default_factory=list)   # velocity, or (m, v) pairs


def sgd_init(params, lr, momentum=0.0) -> OptimizerState:
    return OptimizerState("sgd", lr, momentum, buffers=[np.zeros_like(p.values) for p in params])


def adam_init(params, lr, betas=(0.9, 0.999), eps=1e-8) -> OptimizerState:
    bufs = [(np.zeros_like(p.values), np.zeros_like(p.values)) for p in params]
    return OptimizerState("adam", lr, betas=tuple(betas), eps=eps, buffers=bufs)


def sgd_step(params, state: OptimizerState, lr=None, mu=None):
    lr = state.lr if lr is None else lr
    mu = state.momentum if mu is None else mu
    for p, v in zip(params, state.buffers):
        if p.grad is None:
            continue
        v *= mu
        v += p.grad
        p.values -= lr * v
    state.step += 1


def adam_step(params, state: OptimizerState, lr=None, beta1=None, beta2=None, eps=None):
    lr = state.lr if lr is None else lr
    b1 = state.betas[0] if beta1 is None else beta1
    b2 = state.betas[1] if beta2 is None else beta2
    eps = state.eps if eps is None else eps
    state.step += 1
    t = state.step
    c1, c2 = 1 - b1**t, 1 - b2**t
    for p, (m, v) in zip(params, state.buffers):
        if p.grad is None:
            continue
        g = p.grad
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p.values -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(p.values.dtype)


class SGD:
    def __init__(self, params, lr, momentum=0.0):
        self.params = list(params)
        self.state = sgd_init(self.params, lr, momentum)

    @property
    def lr(self):
        return self.state.lr

    @lr.setter
    def lr(self, value):
        self.state.lr = value

    def step(self):
        sgd_step(self.params, self.state)


class Adam(SGD):
    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.state = adam_init(self.params, lr, betas, eps)

    def step(self):
        adam_step(self.params, self.state)


def step_scheduler(lr0: float, gamma: float, step_size: int, epoch: int) -> float:
    if step_size < 1 or not 0 < gamma <= 1:
        raise ValueError("need step_size >= 1 and 0 < gamma <= 1")
    return lr0 * gamma ** math.floor(epoch / step_size)
