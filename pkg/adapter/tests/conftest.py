"""Shared fixtures: miniature datasets generated through the toolkit CLI.

The adapter talks to the dataset toolkit only through its command line and
file formats, so every fixture here shells out to `relkit` the same way a
user would. Tests are free to import `relkit` directly as a parsing oracle;
the adapter package itself never does.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

RELKIT = [sys.executable, "-m", "relkit.cli"]
ADAPTER = [sys.executable, "-m", "adapter.cli"]


def run_cli(argv: list[str]) -> subprocess.CompletedProcess:
    return subprocess.run(argv, capture_output=True, text=True)


def generate_dataset(root: Path, config: dict) -> Path:
    cfg = root / "config.json"
    cfg.write_text(json.dumps(config), encoding="utf-8")
    out = root / "data"
    proc = run_cli([*RELKIT, "generate", str(cfg), str(out)])
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory) -> Path:
    """48 stimuli across three splits; enough to drive every interface."""
    root = tmp_path_factory.mktemp("mini")
    return generate_dataset(
        root,
        {
            "source": "squiggle",
            "object_count": 16,
            "split_sizes": [10, 3, 3],
            "stimuli_per_split": 16,
            "root_seed": 77,
        },
    )


@pytest.fixture(scope="session")
def finetune_run(mini_dataset, tmp_path_factory) -> Path:
    """One `adapter finetune` run: 2-point grid, 5 seeds, 2 test manifests."""
    out = tmp_path_factory.mktemp("finetune")
    spec = {
        "backbone": "convnet-small",
        "dataset_dir": str(mini_dataset),
        "out_dir": str(out),
        "model_id": "mini",
        "epochs": 2,
        "batch_size": 8,
        "learning_rates": [1e-3, 1e-4],
        "schedulers": ["exponential"],
        "optimizers": ["adam"],
        "seeds": 5,
        "test_manifests": [
            str(mini_dataset / "manifest_test.jsonl"),
            str(mini_dataset / "manifest_val.jsonl"),
        ],
    }
    spec_path = out / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    proc = run_cli([*ADAPTER, "finetune", "--spec", str(spec_path)])
    assert proc.returncode == 0, proc.stderr
    return out
