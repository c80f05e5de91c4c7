"""Shared desk-scale fixtures and the per-criterion acceptance summary."""

import re
import time

import pytest

from hgmodes.dataset import DatasetManifest
from hgmodes.holo import gen_pseudo_experimental
from hgmodes.presets import desk_gen_config, model_config, optics_config, pexp_per_class, train_hyperparams
from hgmodes.simgen import generate_dataset

DESK_SEED = 0

_criteria: dict[int, tuple[bool, str]] = {}
_details: dict[str, str] = {}


@pytest.fixture(scope="session")
def desk_data(tmp_path_factory):
    """Desk train/val/pseudo-experimental manifests, generated once per session."""
    root = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    train, val = generate_dataset(desk_gen_config(DESK_SEED), root)
    t1 = time.perf_counter()
    pexp = gen_pseudo_experimental(optics_config("desk"), pexp_per_class("desk"), DESK_SEED, root)
    t2 = time.perf_counter()
    return {"root": root, "train": train, "val": val, "pexp": DatasetManifest.load(root / "pexp.json"),
            "gen_seconds": t1 - t0, "pexp_seconds": t2 - t1, "n_pexp": len(pexp)}


def run_desk_training(desk_data, out_dir):
    from hgmodes.pipeline.train import train
    hp = train_hyperparams("desk", seed=DESK_SEED)
    rep = train(model_config("desk"), desk_data["train"], desk_data["val"], desk_data["pexp"], hp, out_dir=out_dir)
    return hp, rep


@pytest.fixture(scope="session")
def desk_run(desk_data, tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_run")
    hp, rep = run_desk_training(desk_data, out)
    return {"out": out, "hp": hp, "report": rep}


@pytest.fixture
def criterion(request):
    """Call ``criterion(detail)`` to attach a one-line detail to this acceptance test."""
    def note(detail: str):
        _details[request.node.nodeid] = detail
        print(detail)
    return note


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m or report.when not in ("setup", "call") or (report.when == "setup" and report.passed):
        return
    detail = _details.get(report.nodeid, "")
    if not report.passed:
        lines = str(report.longrepr).strip().splitlines()
        detail = "; ".join(x for x in (detail, lines[-1] if lines else "error") if x)
    ok, prev = _criteria.get(int(m.group(1)), (True, ""))
    _criteria[int(m.group(1))] = (ok and report.passed, "; ".join(x for x in (prev, detail) if x))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        ok, detail = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
