"""Checkpoint files.

Layout (all little-endian):

    uint32      header length L in bytes
    L bytes     UTF-8 JSON header
    ...         each tensor listed in header["tensors"], in order, as float32

The header holds ``format`` ("hgmodes-ckpt/1"), the model config, class
list, normalisation stats, epoch, RNG state and the tensor names/shapes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DatasetIOError
from .resnet import MicroResNet, MicroResNetConfig

CKPT_FORMAT = "hgmodes-ckpt/1"


def save_checkpoint(path, model: MicroResNet, classes, stats=None, epoch=0, rng_state=None, extra=None):
    tensors = model.state_tensors()
    header = {
        "format": CKPT_FORMAT,
        "config": model.cfg.to_dict(),
        "classes": [[int(p[0]), int(p[1])] for p in classes],
        "stats": stats or {},
        "epoch": int(epoch),
        "rng": rng_state,
        "extra": extra or {},
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for _, t in tensors:
                fh.write(np.ascontiguousarray(t.values, dtype="<f4").tobytes())
    except OSError as e:
        raise DatasetIOError(path, e.strerror or str(e)) from e


def read_checkpoint(path):
    """Returns ``(header, {name: float32 array})``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(path, e.strerror or str(e)) from e
    if len(raw) < 4:
        raise DatasetIOError(path, "truncated checkpoint")
    (hlen,) = struct.unpack("<I", raw[:4])
    header = json.loads(raw[4:4 + hlen].decode("utf-8"))
    if header.get("format") != CKPT_FORMAT:
        raise ConfigError(f"{path}: unsupported checkpoint format {header.get('format')!r}")
    arrays = {}
    off = 4 + hlen
    for spec in header["tensors"]:
        n = int(np.prod(spec["shape"], dtype=np.int64))
        end = off + 4 * n
        if end > len(raw):
            raise DatasetIOError(path, "truncated checkpoint")
        arrays[spec["name"]] = np.frombuffer(raw[off:end], dtype="<f4").reshape(spec["shape"]).astype(np.float32)
        off = end
    return header, arrays


def load_checkpoint(path):
    """Rebuild the model; returns ``(model, header)``."""
    header, arrays = read_checkpoint(path)
    model = MicroResNet(MicroResNetConfig.from_dict(header["config"]))
    for name, t in model.state_tensors():
        if name not in arrays or arrays[name].shape != t.shape:
            raise ConfigError(f"{path}: tensor {name} missing or mis-shaped")
        t.values = arrays[name].copy()
    return model.eval(), header
