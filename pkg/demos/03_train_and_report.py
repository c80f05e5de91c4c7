"""Short end-to-end run through the command line: data, training, evaluation, report.

    python3 demos/03_train_and_report.py [out_dir]

A few minutes on one core. The numbers are far from converged; the point is
the artifacts each stage leaves behind. The full desk run is the slow part
of the acceptance suite.
"""

import sys
from pathlib import Path

from hgmodes.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/run")
data, runs = out / "data", out / "runs"


def hg(*args):
    print("$ hgmodes", " ".join(map(str, args)), flush=True)
    code = main([str(a) for a in args])
    if code:
        sys.exit(code)


hg("gen", "--out", data, "--per-class-train", 12, "--per-class-val", 4, "--seed", 1)
hg("holo", "--out", data, "--per-class", 2, "--seed", 1)
for lr in (0.01, 0.05):
    hg("train", "--data", data, "--out", runs / f"lr{lr}", "--epochs", 3, "--lr0", lr, "--batch-size", 16)
hg("eval", "--checkpoint", runs / "lr0.01" / "best.ckpt", "--manifest", data / "pexp.json", "--out", out / "eval")
hg("report", runs, "--out", out / "report")
print((out / "report" / "summary.md").read_text())
