"""PNG image I/O and the JSON dataset manifest shared by simulated and
pseudo-experimental datasets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, DatasetIOError
from .physics import ModePair, SensorGeometry

MANIFEST_VERSION = "hgmodes-manifest/1"


def quantize(values) -> np.ndarray:
    """Map ``[0, 1]`` floats onto 8-bit levels, rounding half up."""
    v = np.asarray(values, dtype=float)
    return np.floor(np.clip(v, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(values, path) -> None:
    """Write an 8-bit single-channel PNG; float input is quantized first."""
    a = np.asarray(values)
    if a.dtype != np.uint8:
        a = quantize(a)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(a, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise DatasetIOError(path, exc.strerror or str(exc)) from exc


def load_png(path) -> np.ndarray:
    """Read a grayscale PNG as float32 in ``[0, 1]``."""
    try:
        with Image.open(path) as im:
            a = np.asarray(im.convert("L"), dtype=np.float32)
    except OSError as exc:
        raise DatasetIOError(path, str(exc)) from exc
    return a / np.float32(255.0)


@dataclass
class Record:
    path: str
    class_id: int
    n: int
    m: int
    w0x: float
    w0y: float
    x0: float
    y0: float
    theta: float
    noise_sigma: float
    seed: int

    @property
    def mode(self) -> ModePair:
        return ModePair(self.n, self.m)


@dataclass
class DatasetManifest:
    geometry: SensorGeometry
    records: list[Record]
    seed: int
    split: str = "train"
    stats: dict | None = None
    generator: dict = field(default_factory=dict)
    version: str = MANIFEST_VERSION
    root: Path | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.records)

    def class_ids(self) -> list[int]:
        return sorted({r.class_id for r in self.records})

    def resolve(self, rec: Record) -> Path:
        return (self.root or Path(".")) / rec.path

    def to_json(self) -> str:
        d = {
            "version": self.version,
            "split": self.split,
            "geometry": self.geometry.to_dict(),
            "seed": self.seed,
            "stats": self.stats,
            "generator": self.generator,
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(d, indent=1, sort_keys=False) + "\n"

    def save(self, path) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json(), encoding="utf-8")
        except OSError as exc:
            raise DatasetIOError(path, exc.strerror or str(exc)) from exc
        self.root = path.parent

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise DatasetIOError(path, exc.strerror or str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a manifest ({exc})") from exc
        if d.get("version") != MANIFEST_VERSION:
            raise ConfigError(f"{path}: unsupported manifest version {d.get('version')!r}")
        records = [Record(**r) for r in d["records"]]
        for r in records:
            if ModePair(r.n, r.m).class_id != r.class_id:
                raise ConfigError(f"{path}: record {r.path} has class_id inconsistent with ({r.n}, {r.m})")
        return cls(
            geometry=SensorGeometry.from_dict(d["geometry"]),
            records=records,
            seed=int(d["seed"]),
            split=d.get("split", "train"),
            stats=d.get("stats"),
            generator=d.get("generator", {}),
            version=d["version"],
            root=path.parent,
        )

    def load_images(self) -> tuple[np.ndarray, np.ndarray]:
        """All images as a float32 ``(N, H, W)`` stack plus int labels."""
        imgs = np.stack([load_png(self.resolve(r)) for r in self.records]) if self.records else np.zeros((0, 1, 1), np.float32)
        labels = np.array([r.class_id for r in self.records], dtype=np.int64)
        return imgs, labels
