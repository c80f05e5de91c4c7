"""Image transforms for 2D float arrays (one grey channel).

``random_resized_crop`` follows the familiar torchvision sampling rule:
ten attempts at a random area fraction and log-uniform aspect ratio, then a
centred fallback at the clamped aspect ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, CropTooLarge


@dataclass
class AugmentConfig:
    scale: tuple = (0.08, 1.0)
    ratio: tuple = (3 / 4, 4 / 3)
    size: int = 64
    hflip_p: float = 0.5
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if not 0 < self.scale[0] <= self.scale[1] <= 1:
            raise ConfigError(f"bad crop scale range {self.scale}")
        if not 0 < self.ratio[0] <= self.ratio[1]:
            raise ConfigError(f"bad aspect range {self.ratio}")
        if not 0 <= self.hflip_p <= 1:
            raise ConfigError("hflip_p must lie in [0, 1]")
        if self.std <= 0:
            raise ConfigError("std must be positive")


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Linear-interpolation weights with half-pixel centres (edges clamped)."""
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = src - i0
    M = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    M[rows, i0] += 1 - t
    M[rows, i1] += t
    return M


def resize_bilinear(img, out_h: int, out_w: int | None = None) -> np.ndarray:
    out_w = out_h if out_w is None else out_w
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return np.array(img, copy=True)
    dt = img.dtype if np.issubdtype(img.dtype, np.floating) else np.float64
    ry = _interp_matrix(h, out_h).astype(dt)
    rx = _interp_matrix(w, out_w).astype(dt)
    return ry @ img.astype(dt) @ rx.T


def crop_params(shape, rng: np.random.Generator, scale=(0.08, 1.0), ratio=(3 / 4, 4 / 3)):
    """Returns ``(top, left, h, w)`` of a random crop."""
    H, W = shape
    area = H * W
    log_r = (math.log(ratio[0]), math.log(ratio[1]))
    for _ in range(10):
        target = area * rng.uniform(scale[0], scale[1])
        aspect = math.exp(rng.uniform(*log_r))
        w = int(round(math.sqrt(target * aspect)))
        h = int(round(math.sqrt(target / aspect)))
        if 0 < w <= W and 0 < h <= H:
            top = int(rng.integers(0, H - h + 1))
            left = int(rng.integers(0, W - w + 1))
            return top, left, h, w
    # fallback: the whole image at the nearest allowed aspect ratio
    in_ratio = W / H
    if in_ratio < ratio[0]:
        w, h = W, int(round(W / ratio[0]))
    elif in_ratio > ratio[1]:
        h, w = H, int(round(H * ratio[1]))
    else:
        w, h = W, H
    return (H - h) // 2, (W - w) // 2, h, w


def random_resized_crop(img, rng, cfg: AugmentConfig) -> np.ndarray:
    if min(img.shape) < 8:
        raise CropTooLarge("random_resized_crop needs an image of at least 8x8")
    top, left, h, w = crop_params(img.shape, rng, cfg.scale, cfg.ratio)
    return resize_bilinear(img[top:top + h, left:left + w], cfg.size, cfg.size)


def random_hflip(img, rng, p: float = 0.5) -> np.ndarray:
    return img[:, ::-1] if rng.random() < p else img


def center_crop(img, size: int) -> np.ndarray:
    """Centred window; an odd remainder leaves the extra row/column at the bottom/right."""
    H, W = img.shape
    if size > H or size > W:
        raise CropTooLarge(f"cannot crop {size} px from a {H}x{W} image")
    top, left = (H - size) // 2, (W - size) // 2
    return img[top:top + size, left:left + size]


def normalize(img, mean: float, std: float) -> np.ndarray:
    if std <= 0:
        raise ConfigError("std must be positive")
    return (img - mean) / std


def train_transform(img, rng, cfg: AugmentConfig) -> np.ndarray:
    out = random_hflip(random_resized_crop(img, rng, cfg), rng, cfg.hflip_p)
    return normalize(out, cfg.mean, cfg.std)


def eval_transform(img, cfg: AugmentConfig) -> np.ndarray:
    """Centre crop when the image is larger than the input size, resize when smaller."""
    if img.shape[0] >= cfg.size and img.shape[1] >= cfg.size:
        img = center_crop(img, cfg.size)
    else:
        img = resize_bilinear(img, cfg.size, cfg.size)
    return normalize(img, cfg.mean, cfg.std)


def augment_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Augmentation draws depend only on (seed, epoch, image index)."""
    return np.random.default_rng([seed, epoch, index, 0xA06])
