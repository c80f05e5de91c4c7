"""Plots and tables from training runs.

A run is a directory holding ``metrics.csv`` (and usually ``report.json``).
Plots are hand-written SVG so no plotting library is needed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ConfigError

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
SUMMARY_COLUMNS = ["run", "lr0", "momentum", "batch_size", "epochs", "best_epoch", "best_exp_acc", "corr_acc",
                   "final_val_acc"]


@dataclass
class Run:
    name: str
    metrics: list[dict]
    hyperparams: dict

    def series(self, key):
        pts = [(int(r["epoch"]), float(r[key])) for r in self.metrics if r.get(key) not in (None, "")]
        return pts

    def label(self):
        hp = self.hyperparams
        if not hp:
            return self.name
        return f"{self.name}: lr {hp['lr0']:.3g}, mu {hp['momentum']:.3g}, batch {hp['batch_size']}"


def load_run(path) -> Run:
    path = Path(path)
    with open(path / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    hp = {}
    rep = path / "report.json"
    if rep.exists():
        hp = json.loads(rep.read_text()).get("hyperparams", {})
    return Run(path.name, rows, hp)


def find_runs(root) -> list[Run]:
    """The directory itself if it is a run, otherwise every run below it (sorted)."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigError(f"{root}: no runs found (not a directory)")
    if (root / "metrics.csv").exists():
        return [load_run(root)]
    runs = [load_run(p.parent) for p in sorted(root.rglob("metrics.csv"))]
    if not runs:
        raise ConfigError(f"{root}: no runs found")
    return runs


def best_row(run: Run):
    """Epoch with the best pseudo-experimental accuracy (val accuracy when absent)."""
    if not run.metrics:
        return None
    key = "pexp_acc" if all(r.get("pexp_acc") for r in run.metrics) else "val_acc"
    best = None
    for r in run.metrics:
        if best is None or float(r[key]) > float(best[key]):
            best = r
    return best


def summary_rows(runs) -> list[dict]:
    rows = []
    for run in runs:
        hp, b = run.hyperparams, best_row(run)
        rows.append({
            "run": run.name,
            "lr0": hp.get("lr0", ""),
            "momentum": hp.get("momentum", ""),
            "batch_size": hp.get("batch_size", ""),
            "epochs": len(run.metrics),
            "best_epoch": b["epoch"] if b else "",
            "best_exp_acc": b.get("pexp_acc", "") if b else "",
            "corr_acc": b["val_acc"] if b else "",
            "final_val_acc": run.metrics[-1]["val_acc"] if run.metrics else "",
        })
    return rows


def _pct(v):
    return "" if v in ("", None) else f"{100 * float(v):.2f}"


def write_summary(rows, csv_path, md_path):
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    head = ["Run", "lr0", "Momentum", "Batch", "Epochs", "Best epoch", "Best Exp. Acc. (%)",
            "Best Corr. Acc. (%)", "Final Val. Acc. (%)"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in rows:
        lr = f"{float(r['lr0']):.6g}" if r["lr0"] != "" else ""
        mu = f"{float(r['momentum']):.6g}" if r["momentum"] != "" else ""
        cells = [r["run"], lr, mu, str(r["batch_size"]), str(r["epochs"]), str(r["best_epoch"]),
                 _pct(r["best_exp_acc"]), _pct(r["corr_acc"]), _pct(r["final_val_acc"])]
        lines.append("| " + " | ".join(cells) + " |")
    Path(md_path).write_text("\n".join(lines) + "\n")


def accuracy_svg(runs, title="Accuracy vs. epoch", width=720, height=440) -> str:
    """Val accuracy solid, pseudo-experimental accuracy dashed; one colour per run."""
    left, right, top, bottom = 60, 20, 40, 60 + 18 * len(runs)
    pw, ph = width - left - right, height - top - 60
    height = top + ph + bottom
    max_ep = max([e for run in runs for e, _ in run.series("val_acc")] + [1])

    def sx(e):
        return left + pw * e / max_ep

    def sy(a):
        return top + ph * (1 - a)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for k in range(6):
        a = k / 5
        out.append(f'<line x1="{left}" y1="{sy(a):.1f}" x2="{left + pw}" y2="{sy(a):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{sy(a) + 4:.1f}" text-anchor="end">{100 * a:.0f}</text>')
    step = max(1, max_ep // 10)
    for e in range(0, max_ep + 1, step):
        out.append(f'<text x="{sx(e):.1f}" y="{top + ph + 16}" text-anchor="middle">{e}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2}" y="{top + ph + 34}" text-anchor="middle">Epoch</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">Accuracy (%)</text>')
    for i, run in enumerate(runs):
        col = PALETTE[i % len(PALETTE)]
        for key, dash in (("val_acc", ""), ("pexp_acc", ' stroke-dasharray="6 4"')):
            pts = run.series(key)
            if pts:
                d = " ".join(f"{sx(e):.1f},{sy(a):.1f}" for e, a in pts)
                out.append(f'<polyline class="{key}" points="{d}" fill="none" stroke="{col}" stroke-width="2"{dash}/>')
        ly = top + ph + 50 + 18 * i
        out.append(f'<line x1="{left}" y1="{ly}" x2="{left + 24}" y2="{ly}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{left + 30}" y="{ly + 4}">{escape(run.label())}</text>')
    out.append(f'<text x="{left + pw}" y="{top - 6}" text-anchor="end" font-size="11">'
               'solid: simulated val, dashed: pseudo-experimental</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def make_report(runs_dir, out_dir=None) -> dict:
    """Writes ``accuracy.svg``, ``summary.csv`` and ``summary.md``; returns their paths."""
    runs = find_runs(runs_dir)
    out_dir = Path(out_dir) if out_dir is not None else Path(runs_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"svg": out_dir / "accuracy.svg", "csv": out_dir / "summary.csv", "md": out_dir / "summary.md"}
    paths["svg"].write_text(accuracy_svg(runs))
    write_summary(summary_rows(runs), paths["csv"], paths["md"])
    return paths
