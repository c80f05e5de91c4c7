"""Command-line entry point: ``hgmodes <gen|holo|train|eval|search|report>``.

Values come from, in increasing priority: the preset, a ``--config`` JSON
file whose keys are the long flag names (dashes or underscores), and
explicit flags. The effective configuration is written to
``run_config.json`` in the output directory.

Exit codes: 0 success, 2 usage or configuration error, 3 domain error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetManifest
from .errors import ConfigError, DatasetIOError, DomainError, HGModesError

log = logging.getLogger("hgmodes")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


def _carrier(text):
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"carrier must be FX or FX,FY, got {text!r}")
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"carrier must be FX or FX,FY, got {text!r}")
    return tuple(parts)


def _common(p, out_required=True):
    p.add_argument("--config", help="JSON file of flag values (flags given on the command line win)")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--verbose", action="store_true")


def _data_flags(p):
    p.add_argument("--data", help="directory holding train.json, val.json and optionally pexp.json")
    p.add_argument("--train", help="training manifest (overrides --data)")
    p.add_argument("--val", help="validation manifest (overrides --data)")
    p.add_argument("--pexp", help="pseudo-experimental manifest (overrides --data)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgmodes", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"hgmodes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{gen,holo,train,eval,search,report}")

    p = sub.add_parser("gen", help="simulated train/val dataset")
    _common(p)
    p.add_argument("--per-class-train", type=int)
    p.add_argument("--per-class-val", type=int)
    p.add_argument("--px", type=int, help="image size in pixels")
    p.add_argument("--resolution-px", type=int, help="pixel count used for the lobe-resolution radius bound")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("holo", help="pseudo-experimental dataset through the simulated hologram bench")
    _common(p)
    p.add_argument("--per-class", type=int, default=118)
    p.add_argument("--px", type=int, help="camera image size in pixels")
    p.add_argument("--carrier", type=_carrier, help="grating frequency FX[,FY] in cycles per hologram pixel")
    p.add_argument("--export-holograms", type=int, default=0, metavar="K",
                   help="also write phase maps of the first K holograms per class")
    p.add_argument("--viz-grating-decimation", type=float, default=0.8,
                   help="fractional grating-frequency reduction for the exported visualisation holograms")
    p.set_defaults(func=cmd_holo)

    p = sub.add_parser("train", help="train a MicroResNet from scratch")
    _common(p)
    _data_flags(p)
    p.add_argument("--lr0", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--step-size", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", help="random hyperparameter search")
    _common(p)
    _data_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--step-size", type=int, default=7)
    p.add_argument("--gamma", type=float, default=0.1)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("report", help="accuracy plots and summary tables from run directories")
    p.add_argument("runs", help="a run directory or a directory of runs")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory (default: the runs directory)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config_file(parser, argv):
    """Parse twice: once to find ``--config``, then with its values as defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        values = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise DatasetIOError(args.config, exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{args.config}: expected a JSON object")
    values = {k.replace("-", "_"): v for k, v in values.items()}
    known = set(vars(args))
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{args.config}: unknown keys {unknown}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    if "carrier" in values and isinstance(values["carrier"], str):
        values["carrier"] = _carrier(values["carrier"])
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def _effective(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k != "func"}
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _echo_config(out_dir: Path, args, resolved: dict | None = None):
    out_dir.mkdir(parents=True, exist_ok=True)
    d = {"version": __version__, "args": _effective(args)}
    if resolved:
        d["resolved"] = resolved
    (out_dir / "run_config.json").write_text(json.dumps(d, indent=1, sort_keys=True) + "\n")


def _manifest(path, what):
    if path is None:
        raise ConfigError(f"no {what} manifest given")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} manifest {p} does not exist")
    return DatasetManifest.load(p)


def _data_manifests(args, need_pexp=False):
    if args.data is not None and not Path(args.data).is_dir():
        raise ConfigError(f"dataset directory {args.data} does not exist")
    base = Path(args.data) if args.data else None
    pick = lambda explicit, name: explicit if explicit else (base / name if base else None)
    train = _manifest(pick(args.train, "train.json"), "train")
    val = _manifest(pick(args.val, "val.json"), "val")
    pexp_path = pick(args.pexp, "pexp.json")
    pexp = None
    if pexp_path is not None and (Path(pexp_path).exists() or args.pexp):
        pexp = _manifest(pexp_path, "pseudo-experimental")
    if need_pexp and pexp is None:
        log.warning("no pseudo-experimental manifest; ranking falls back to validation accuracy")
    return train, val, pexp


def cmd_gen(args) -> int:
    from .presets import gen_config
    from .simgen import generate_dataset
    cfg = gen_config(args.preset, args.seed, out_px=args.px, n_train=args.per_class_train,
                     n_val=args.per_class_val, resolution_px=args.resolution_px)
    out = Path(args.out)
    _echo_config(out, args, cfg.to_dict())
    train, val = generate_dataset(cfg, out)
    print(f"wrote {len(train)} train and {len(val)} val images to {out}")
    return EXIT_OK


def cmd_holo(args) -> int:
    from .holo import gen_pseudo_experimental, sample_pexp_params, save_phase_png, visualization_hologram, \
        encode_target, hologram_target
    from .physics import CLASSES
    from .presets import optics_config
    cfg = optics_config(args.preset, out_px=args.px, carrier=args.carrier)
    per_class = args.per_class
    if per_class < 1:
        raise ConfigError("--per-class must be at least 1")
    if not 0 <= args.viz_grating_decimation < 1:
        raise ConfigError("--viz-grating-decimation must lie in [0, 1)")
    cfg.check_window()
    out = Path(args.out)
    _echo_config(out, args, {"optics": cfg.to_dict(), "per_class": per_class})
    man = gen_pseudo_experimental(cfg, per_class, args.seed, out)
    print(f"wrote {len(man)} pseudo-experimental images to {out}")
    for mode in CLASSES:
        for idx in range(min(args.export_holograms, per_class)):
            params = sample_pexp_params(mode, cfg, args.seed, idx)
            stem = out / "holograms" / f"c{mode.class_id:02d}_{mode.n}{mode.m}_{idx:05d}"
            stem.parent.mkdir(parents=True, exist_ok=True)
            save_phase_png(encode_target(hologram_target(params, cfg), cfg), f"{stem}_phase.png")
            save_phase_png(visualization_hologram(params, cfg, args.viz_grating_decimation), f"{stem}_viz.png")
    return EXIT_OK


def cmd_train(args) -> int:
    from .pipeline.train import train
    from .presets import model_config, train_hyperparams
    train_set, val_set, pexp_set = _data_manifests(args)
    hp = train_hyperparams(args.preset, args.seed, lr0=args.lr0, momentum=args.momentum,
                           batch_size=args.batch_size, epochs=args.epochs, step_size=args.step_size,
                           gamma=args.gamma, optimizer=args.optimizer)
    mcfg = model_config(args.preset)
    out = Path(args.out)
    _echo_config(out, args, {"hyperparams": hp.to_dict(), "model": mcfg.to_dict()})
    rep = train(mcfg, train_set, val_set, pexp_set, hp, out_dir=out,
                progress=lambda r: print(f"epoch {r.epoch:3d}  lr {r.lr:.3g}  loss {r.train_loss:.4f}  "
                                         f"val {r.val_acc:.4f}  pexp "
                                         f"{'-' if r.pexp_acc is None else format(r.pexp_acc, '.4f')}",
                                         flush=True))
    pexp = "-" if rep.best_pexp_acc is None else f"{rep.best_pexp_acc:.4f}"
    print(f"best epoch {rep.best_epoch}: val {rep.best_val_acc:.4f}, pexp {pexp}")
    return EXIT_OK if rep.status == "ok" else EXIT_DOMAIN


def cmd_eval(args) -> int:
    from .pipeline.train import evaluate
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise ConfigError(f"checkpoint {ckpt} does not exist")
    man = _manifest(args.manifest, "evaluation")
    out = Path(args.out)
    _echo_config(out, args)
    res = evaluate(ckpt, man)
    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "true", "pred"])
        for p in res.predictions:
            w.writerow([p["path"], p["true"], p["pred"]])
    (out / "eval.json").write_text(json.dumps({"accuracy": res.accuracy, "n": len(res.predictions),
                                               "confusion": np.asarray(res.confusion).tolist()}, indent=1) + "\n")
    print(f"accuracy {res.accuracy:.4f} on {len(res.predictions)} images")
    return EXIT_OK


def cmd_search(args) -> int:
    from .pipeline.search import SearchSpace, random_search
    from .presets import model_config, search_defaults
    train_set, val_set, pexp_set = _data_manifests(args, need_pexp=True)
    d = search_defaults(args.preset)
    trials = args.trials if args.trials is not None else d["trials"]
    epochs = args.epochs if args.epochs is not None else d["epochs"]
    space = SearchSpace(step_size=args.step_size, gamma=args.gamma)
    out = Path(args.out)
    _echo_config(out, args, {"trials": trials, "epochs": epochs})
    results = random_search(model_config(args.preset), train_set, val_set, pexp_set, space, trials, epochs,
                            args.seed, out_dir=out,
                            progress=lambda r: print(f"trial {r.trial}: lr {r.hp.lr0:.4g} mu {r.hp.momentum:.3f} "
                                                     f"batch {r.hp.batch_size} -> exp {r.best_exp_acc} "
                                                     f"corr {r.corr_acc} [{r.status}]", flush=True))
    best = results[0]
    print(f"best trial {best.trial}: exp {best.best_exp_acc}, corr {best.corr_acc}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import make_report
    paths = make_report(args.runs, args.out)
    for p in paths.values():
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except SystemExit as exc:   # argparse usage errors and --help/--version
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"hgmodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"hgmodes: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (DatasetIOError, OSError) as exc:
        print(f"hgmodes: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HGModesError, ValueError) as exc:
        print(f"hgmodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
