from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, ShapeMismatch
from .layers import BasicBlock, BatchNorm2d, Conv2d, GlobalAvgPool, Linear, Module, ReLU


@dataclass(frozen=True)
class MicroResNetConfig:
    """A small ResNet: 3x3 stem, three stages of basic blocks, GAP and a linear head."""

    input_size: int = 64
    in_channels: int = 1
    stem_channels: int = 16
    stage_channels: tuple = (16, 32, 64)
    blocks_per_stage: int = 2
    num_classes: int = 21

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(int(c) for c in self.stage_channels))
        if min((self.in_channels, self.stem_channels, self.blocks_per_stage, self.num_classes,
                *self.stage_channels)) <= 0:
            raise ConfigError("channel, block and class counts must be positive")
        if self.input_size < 8:
            raise ConfigError("input_size must be >= 8")

    def to_dict(self):
        d = asdict(self)
        d["stage_channels"] = list(self.stage_channels)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**{**d, "stage_channels": tuple(d["stage_channels"])})

    def param_count(self) -> int:
        """Closed-form trainable parameter count."""
        bn = lambda c: 2 * c
        total = 9 * self.in_channels * self.stem_channels + bn(self.stem_channels)
        cin = self.stem_channels
        for s, c in enumerate(self.stage_channels):
            for b in range(self.blocks_per_stage):
                stride = 2 if (s > 0 and b == 0) else 1
                total += 9 * cin * c + bn(c) + 9 * c * c + bn(c)
                if stride != 1 or cin != c:
                    total += cin * c + bn(c)
                cin = c
        return total + cin * self.num_classes + self.num_classes


class MicroResNet(Module):
    def __init__(self, cfg: MicroResNetConfig = MicroResNetConfig(), seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.stem = Conv2d(cfg.in_channels, cfg.stem_channels, 3, 1, rng=rng)
        self.stem_bn = BatchNorm2d(cfg.stem_channels)
        self.stem_relu = ReLU()
        self.blocks = []
        cin = cfg.stem_channels
        for s, c in enumerate(cfg.stage_channels):
            for b in range(cfg.blocks_per_stage):
                stride = 2 if (s > 0 and b == 0) else 1
                self.blocks.append((f"stage{s + 1}.{b}", BasicBlock(cin, c, stride, rng=rng)))
                cin = c
        self.pool = GlobalAvgPool()
        self.fc = Linear(cin, cfg.num_classes, rng=rng)

    def children(self):
        return [("stem", self.stem), ("stem_bn", self.stem_bn), *self.blocks, ("fc", self.fc)]

    def forward(self, x):
        """``x``: ``(N, H, W, C)`` images; returns ``(N, num_classes)`` logits."""
        if x.ndim != 4 or x.shape[3] != self.cfg.in_channels:
            raise ShapeMismatch(f"expected (N, H, W, {self.cfg.in_channels}) input, got {x.shape}")
        y = self.stem_relu(self.stem_bn(self.stem(x)))
        for _, blk in self.blocks:
            y = blk(y)
        return self.fc(self.pool(y))

    def backward(self, dlogits):
        d = self.pool.backward(self.fc.backward(dlogits))
        for _, blk in reversed(self.blocks):
            d = blk.backward(d)
        return self.stem.backward(self.stem_bn.backward(self.stem_relu.backward(d)))

    def state_tensors(self):
        """Parameters then buffers, in declaration order."""
        return list(self.named_parameters()) + list(self.named_buffers())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())
