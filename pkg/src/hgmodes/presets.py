"""Named configurations.

``paper`` mirrors the published protocol (224 px simulated images, 256 px
pseudo-experimental images, 300/200/118 images per class). ``desk`` is the
single-CPU analogue used by the acceptance suite: 64 px simulated images and
a smaller pseudo-experimental set.
"""

from __future__ import annotations

from .holo import OpticalTrainConfig
from .nn.resnet import MicroResNetConfig
from .pipeline.train import Hyperparams
from .simgen import GenConfig

PRESETS = ("paper", "desk")

# pseudo-experimental frames are larger than the network input by the
# published 256/224 ratio and centre-cropped before evaluation
DESK_INPUT = 64
DESK_PEXP_PX = 73


def gen_config(preset: str, seed: int = 0, **overrides) -> GenConfig:
    if preset == "paper":
        base = dict(out_px=224, n_train=300, n_val=200)
    elif preset == "desk":
        base = dict(out_px=DESK_INPUT, n_train=100, n_val=50, resolution_px=224)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return GenConfig(seed=seed, **base)


def desk_gen_config(seed: int = 0, **overrides) -> GenConfig:
    return gen_config("desk", seed, **overrides)


def optics_config(preset: str, **overrides) -> OpticalTrainConfig:
    if preset == "paper":
        base = dict(out_px=256)
    elif preset == "desk":
        base = dict(out_px=DESK_PEXP_PX)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return OpticalTrainConfig(**base)


def pexp_per_class(preset: str) -> int:
    return {"paper": 118, "desk": 50}[preset]


def model_config(preset: str) -> MicroResNetConfig:
    if preset == "paper":
        return MicroResNetConfig(input_size=224)
    if preset == "desk":
        return MicroResNetConfig(input_size=DESK_INPUT)
    raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")


def train_hyperparams(preset: str, seed: int = 0, **overrides) -> Hyperparams:
    if preset == "paper":
        base = dict(lr0=0.0143673, momentum=0.864872, batch_size=64, epochs=30, step_size=7, gamma=0.1)
    elif preset == "desk":
        base = dict(lr0=0.01, momentum=0.9, batch_size=32, epochs=20, step_size=7, gamma=0.1)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return Hyperparams(seed=seed, **base)


def search_defaults(preset: str) -> dict:
    return {"paper": {"trials": 50, "epochs": 30}, "desk": {"trials": 8, "epochs": 12}}[preset]
