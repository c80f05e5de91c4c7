"""Random hyperparameter search.

Each trial draws a learning rate (log-uniform), a momentum (uniform) and a
power-of-two batch size, trains with a step schedule and is scored by its
best pseudo-experimental accuracy.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .train import Hyperparams, train

log = logging.getLogger(__name__)

SEARCH_COLUMNS = ["rank", "trial", "lr0", "momentum", "batch_size", "best_exp_acc",
                  "corr_acc", "best_epoch", "seed", "status"]


@dataclass(frozen=True)
class SearchSpace:
    lr_range: tuple = (1e-3, 0.1)
    momentum_range: tuple = (0.0, 1.0)
    log2_batch: tuple = (3, 8)
    step_size: int = 7
    gamma: float = 0.1

    def __post_init__(self):
        lo, hi = self.lr_range
        if not 0 < lo <= hi:
            raise ConfigError(f"bad lr range {self.lr_range}")
        if not 0 <= self.momentum_range[0] <= self.momentum_range[1] <= 1:
            raise ConfigError(f"bad momentum range {self.momentum_range}")
        if not 3 <= self.log2_batch[0] <= self.log2_batch[1] <= 8:
            raise ConfigError(f"batch exponents must lie in [3, 8], got {self.log2_batch}")


@dataclass
class TrialResult:
    trial: int
    hp: Hyperparams
    best_exp_acc: float | None
    corr_acc: float | None
    best_epoch: int
    status: str

    def row(self, rank):
        f = lambda v: "" if v is None else repr(v)
        return [str(rank), str(self.trial), repr(self.hp.lr0), repr(self.hp.momentum), str(self.hp.batch_size),
                f(self.best_exp_acc), f(self.corr_acc), str(self.best_epoch), str(self.hp.seed), self.status]


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.default_rng([seed, trial, 0x5EA]).integers(0, 2**31 - 1))


def sample_hyperparams(rng: np.random.Generator, space: SearchSpace = SearchSpace(),
                       epochs: int = 12, seed: int = 0) -> Hyperparams:
    lo, hi = space.lr_range
    lr = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    mu = float(rng.uniform(*space.momentum_range))
    batch = 2 ** int(rng.integers(space.log2_batch[0], space.log2_batch[1] + 1))
    return Hyperparams(lr0=lr, momentum=mu, batch_size=batch, epochs=epochs,
                       step_size=space.step_size, gamma=space.gamma, seed=seed)


def _rank_key(r: TrialResult):
    exp = -1.0 if r.best_exp_acc is None else r.best_exp_acc
    corr = -1.0 if r.corr_acc is None else r.corr_acc
    return (r.status != "ok", -exp, -corr, r.trial)


def random_search(model_cfg, train_set, val_set, pexp_set=None, space: SearchSpace = SearchSpace(),
                  trials: int = 8, epochs: int = 12, seed: int = 0, out_dir=None, trainer=train,
                  progress=None) -> list[TrialResult]:
    """Runs ``trials`` independent trainings and returns them ranked.

    A trial that raises is recorded with ``status = "failed: ..."`` and the
    sweep continues. With ``out_dir`` each trial writes into ``trial_NN/``
    and the ranked table goes to ``search.csv``.
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    rng = np.random.default_rng([seed, 0x5EA5C])
    out_dir = Path(out_dir) if out_dir is not None else None
    results = []
    for t in range(trials):
        hp = sample_hyperparams(rng, space, epochs, trial_seed(seed, t))
        tdir = out_dir / f"trial_{t:02d}" if out_dir is not None else None
        try:
            rep = trainer(model_cfg, train_set, val_set, pexp_set, hp, out_dir=tdir)
            exp = rep.best_pexp_acc
            res = TrialResult(t, hp, exp, rep.best_val_acc, rep.best_epoch, rep.status)
        except Exception as exc:  # a failed trial must not end the sweep
            log.warning("trial %d failed: %s", t, exc)
            res = TrialResult(t, hp, None, None, -1, f"failed: {type(exc).__name__}: {exc}")
        results.append(res)
        if progress is not None:
            progress(res)
    results.sort(key=_rank_key)
    if out_dir is not None:
        write_search_csv(out_dir / "search.csv", results)
    return results


def write_search_csv(path, results):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEARCH_COLUMNS)
        for rank, r in enumerate(results, 1):
            w.writerow(r.row(rank))
