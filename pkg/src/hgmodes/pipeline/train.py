"""Training and evaluation loops."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import DatasetManifest
from ..errors import ClassSetMismatch, ConfigError
from ..nn import functional as F
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..nn.optim import SGD, Adam, step_scheduler
from ..nn.resnet import MicroResNet, MicroResNetConfig
from ..physics import CLASSES
from .transforms import AugmentConfig, augment_rng, eval_transform, train_transform

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "val_acc", "pexp_acc"]


@dataclass
class Hyperparams:
    lr0: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 20
    step_size: int = 7
    gamma: float = 0.1
    optimizer: str = "sgd"
    seed: int = 0

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ConfigError("lr0 must be positive")
        if not 0 <= self.momentum <= 1:
            raise ConfigError("momentum must lie in [0, 1]")
        b = self.batch_size
        if b < 8 or b > 256 or b & (b - 1):
            raise ConfigError(f"batch_size must be a power of two in [8, 256], got {b}")
        if self.epochs < 1 or self.step_size < 1 or not 0 < self.gamma <= 1:
            raise ConfigError("need epochs >= 1, step_size >= 1 and 0 < gamma <= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")

    def lr_at(self, epoch: int) -> float:
        return step_scheduler(self.lr0, self.gamma, self.step_size, epoch)

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_acc: float
    pexp_acc: float | None
    seconds: float = 0.0

    def row(self):
        pexp = "" if self.pexp_acc is None else repr(self.pexp_acc)
        return [str(self.epoch), repr(self.lr), repr(self.train_loss), repr(self.train_acc), repr(self.val_acc), pexp]


@dataclass
class TrainReport:
    hyperparams: dict
    epochs: list = field(default_factory=list)
    best_epoch: int = -1
    best_pexp_acc: float | None = None
    best_val_acc: float = 0.0
    confusion: list | None = None
    confusion_set: str = "val"
    initial_loss: float = float("nan")
    wall_time: float = 0.0
    seeds: dict = field(default_factory=dict)
    status: str = "ok"

    def to_dict(self):
        d = asdict(self)
        d["epochs"] = [asdict(e) for e in self.epochs]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["epochs"] = [EpochRecord(**e) for e in d.get("epochs", [])]
        return cls(**d)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    predictions: list


def _check_classes(manifest: DatasetManifest, num_classes: int, what: str):
    ids = manifest.class_ids()
    if ids and max(ids) >= num_classes:
        raise ClassSetMismatch(f"{what} contains class ids {sorted(set(ids))} beyond the model's {num_classes}")


def _norm_stats(train: DatasetManifest):
    stats = train.stats or {}
    return float(stats.get("mean", 0.0)), float(stats.get("std", 1.0)) or 1.0


def prepare_eval(manifest: DatasetManifest, aug: AugmentConfig):
    imgs, labels = manifest.load_images()
    x = np.stack([eval_transform(im, aug) for im in imgs]).astype(np.float32)
    return x[..., None], labels


def predict(model: MicroResNet, x: np.ndarray, batch: int = 64) -> np.ndarray:
    model.eval()
    out = [model.forward(x[i:i + batch]).argmax(axis=1) for i in range(0, len(x), batch)]
    return np.concatenate(out) if out else np.zeros(0, dtype=int)


def confusion_matrix(labels, preds, num_classes: int) -> np.ndarray:
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels), np.asarray(preds)), 1)
    return cm


def _accuracy(labels, preds) -> float:
    return float(np.mean(np.asarray(labels) == np.asarray(preds))) if len(labels) else 0.0


def write_metrics(path, records):
    """Per-epoch CSV. Wall-clock seconds go to a ``timing.csv`` sidecar so
    that this file is identical across repeated runs."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for r in records:
            w.writerow(r.row())
    with open(path.with_name("timing.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "seconds"])
        for r in records:
            w.writerow([r.epoch, f"{r.seconds:.3f}"])


def train(model_cfg: MicroResNetConfig, train_set: DatasetManifest, val_set: DatasetManifest,
          pexp_set: DatasetManifest | None = None, hp: Hyperparams | None = None,
          out_dir=None, aug: AugmentConfig | None = None, progress=None) -> TrainReport:
    """Train from scratch; evaluates val (and pseudo-experimental) data after every epoch.

    The best epoch is picked on pseudo-experimental accuracy when that set is
    given, otherwise on validation accuracy. With ``out_dir`` the run writes
    ``metrics.csv``, ``timing.csv``, ``best.ckpt`` and ``report.json``.
    """
    hp = hp or Hyperparams()
    t_start = time.perf_counter()
    for man, what in ((train_set, "train"), (val_set, "val"), (pexp_set, "pseudo-experimental")):
        if man is not None:
            _check_classes(man, model_cfg.num_classes, what + " set")
    mean, std = _norm_stats(train_set)
    aug = aug or AugmentConfig(size=model_cfg.input_size, mean=mean, std=std)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    train_imgs, train_labels = train_set.load_images()
    x_val, y_val = prepare_eval(val_set, aug)
    x_pexp, y_pexp = prepare_eval(pexp_set, aug) if pexp_set is not None else (None, None)

    model = MicroResNet(model_cfg, seed=hp.seed)
    params = model.parameters()
    opt = SGD(params, hp.lr0, hp.momentum) if hp.optimizer == "sgd" else Adam(params, hp.lr0)
    classes = list(CLASSES[:model_cfg.num_classes])
    report = TrainReport(hyperparams=hp.to_dict(),
                         seeds={"model_init": hp.seed, "shuffle": hp.seed, "augment": hp.seed,
                                "dataset": train_set.seed})
    n = len(train_imgs)
    best_key = None
    for epoch in range(hp.epochs):
        t0 = time.perf_counter()
        lr = hp.lr_at(epoch)
        opt.lr = lr
        model.train()
        order = np.random.default_rng([hp.seed, epoch, 0x5348]).permutation(n)
        losses, correct, seen = [], 0, 0
        for b0 in range(0, n, hp.batch_size):
            idx = order[b0:b0 + hp.batch_size]
            if len(idx) < 2:   # batch norm cannot train on a single sample
                continue
            xb = np.stack([train_transform(train_imgs[i], augment_rng(hp.seed, epoch, int(i)), aug)
                           for i in idx]).astype(np.float32)[..., None]
            yb = train_labels[idx]
            logits = model.forward(xb)
            loss, grad = F.softmax_cross_entropy(logits, yb)
            if not np.isfinite(loss):
                report.status = f"diverged at epoch {epoch}"
                break
            if epoch == 0 and b0 == 0:
                report.initial_loss = loss
            model.zero_grad()
            model.backward(grad.astype(np.float32))
            opt.step()
            losses.append(loss * len(idx))
            correct += int((logits.argmax(axis=1) == yb).sum())
            seen += len(idx)
        if report.status != "ok":
            break
        val_pred = predict(model, x_val)
        val_acc = _accuracy(y_val, val_pred)
        pexp_acc = pexp_pred = None
        if x_pexp is not None:
            pexp_pred = predict(model, x_pexp)
            pexp_acc = _accuracy(y_pexp, pexp_pred)
        rec = EpochRecord(epoch, lr, float(sum(losses) / max(seen, 1)), correct / max(seen, 1),
                          val_acc, pexp_acc, time.perf_counter() - t0)
        report.epochs.append(rec)
        key = pexp_acc if pexp_acc is not None else val_acc
        if best_key is None or key > best_key:
            best_key = key
            report.best_epoch = epoch
            report.best_val_acc = val_acc
            report.best_pexp_acc = pexp_acc
            if pexp_pred is not None:
                report.confusion = confusion_matrix(y_pexp, pexp_pred, model_cfg.num_classes).tolist()
                report.confusion_set = "pexp"
            else:
                report.confusion = confusion_matrix(y_val, val_pred, model_cfg.num_classes).tolist()
                report.confusion_set = "val"
            if out_dir is not None:
                save_checkpoint(out_dir / "best.ckpt", model, [(p.n, p.m) for p in classes],
                                {"mean": mean, "std": std}, epoch, {"seed": hp.seed},
                                extra={"input_size": aug.size})
        log.info("epoch %d lr %.3g loss %.4f train %.4f val %.4f pexp %s", epoch, lr, rec.train_loss,
                 rec.train_acc, val_acc, "-" if pexp_acc is None else f"{pexp_acc:.4f}")
        if progress is not None:
            progress(rec)
        if out_dir is not None:
            write_metrics(out_dir / "metrics.csv", report.epochs)
    report.wall_time = time.perf_counter() - t_start
    if out_dir is not None:
        write_metrics(out_dir / "metrics.csv", report.epochs)
        (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=1))
    return report


def evaluate(checkpoint, manifest: DatasetManifest) -> EvalResult:
    """Top-1 accuracy, confusion matrix (rows = true class) and per-image predictions."""
    if isinstance(checkpoint, (str, Path)):
        model, header = load_checkpoint(checkpoint)
        stats = header.get("stats") or {}
        size = model.cfg.input_size
    else:
        model, stats = checkpoint
        size = model.cfg.input_size
    _check_classes(manifest, model.cfg.num_classes, "manifest")
    aug = AugmentConfig(size=size, mean=float(stats.get("mean", 0.0)), std=float(stats.get("std", 1.0)) or 1.0)
    x, y = prepare_eval(manifest, aug)
    pred = predict(model, x)
    cm = confusion_matrix(y, pred, model.cfg.num_classes)
    preds = [{"path": r.path, "true": int(t), "pred": int(p)} for r, t, p in zip(manifest.records, y, pred)]
    return EvalResult(_accuracy(y, pred), cm, preds)
