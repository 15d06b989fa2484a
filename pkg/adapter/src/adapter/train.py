"""Fine-tuning protocol: grid search, seeded replicates, exports.

The protocol: train for `epochs` epochs at batch size `batch_size` with
binary cross-entropy, grid-searching initial learning rate x scheduler
x optimizer. The grid winner is the configuration with the highest
in-distribution validation accuracy; it is then retrained under `seeds`
different seeds, and each replicate writes one prediction CSV per
requested test manifest. Selection is logged, reproducible, and the only
place any accuracy is computed here; scoring of exports belongs to the
dataset toolkit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import torch
import torch.nn.functional as F

from adapter.data import StimulusData
from adapter.formats import Prediction, read_manifest, write_predictions
from adapter.models import AdapterError, SameDiffModel, build_backbone, save_checkpoint

DEFAULT_LEARNING_RATES = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
DEFAULT_SCHEDULERS = ("exponential", "plateau")
DEFAULT_OPTIMIZERS = ("sgd", "adam", "adamw")


@dataclass
class TrainSpec:
    backbone: str
    dataset_dir: str
    out_dir: str
    pretraining: str = "random"
    model_id: str = "model"
    epochs: int = 70
    batch_size: int = 128
    learning_rates: tuple = DEFAULT_LEARNING_RATES
    schedulers: tuple = DEFAULT_SCHEDULERS
    optimizers: tuple = DEFAULT_OPTIMIZERS
    seeds: int = 5
    test_manifests: tuple = field(default_factory=tuple)
    device: str = "cpu"

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.seeds < 1:
            raise AdapterError("epochs, batch_size, and seeds must be positive")
        if not self.learning_rates or not self.schedulers or not self.optimizers:
            raise AdapterError("grid axes must be non-empty")
        for s in self.schedulers:
            if s not in DEFAULT_SCHEDULERS:
                raise AdapterError(f"unknown scheduler {s!r}")
        for o in self.optimizers:
            if o not in DEFAULT_OPTIMIZERS:
                raise AdapterError(f"unknown optimizer {o!r}")

    @staticmethod
    def from_json(path) -> "TrainSpec":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        known = set(TrainSpec.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise AdapterError(f"unknown spec keys: {sorted(extra)}")
        missing = {"backbone", "dataset_dir", "out_dir"} - set(d)
        if missing:
            raise AdapterError(f"spec is missing keys: {sorted(missing)}")
        spec = TrainSpec(**d)
        spec.learning_rates = tuple(spec.learning_rates)
        spec.schedulers = tuple(spec.schedulers)
        spec.optimizers = tuple(spec.optimizers)
        spec.test_manifests = tuple(spec.test_manifests)
        spec.validate()
        return spec


def make_optimizer(name: str, params, lr: float):
    if name == "sgd":
        return torch.optim.SGD(params, lr=lr)
    if name == "adam":
        return torch.optim.Adam(params, lr=lr)
    if name == "adamw":
        return torch.optim.AdamW(params, lr=lr)
    raise AdapterError(f"unknown optimizer {name!r}")


def make_scheduler(name: str, optimizer):
    if name == "exponential":
        return torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=0.95)
    if name == "plateau":
        return torch.optim.lr_scheduler.ReduceLROnPlateau(optimizer, patience=2)
    raise AdapterError(f"unknown scheduler {name!r}")


def _bce_loss(logits: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    # two-logit head; BCE on the softmax "same" probability == cross-entropy
    return F.cross_entropy(logits, y)


@torch.no_grad()
def _val_stats(model: SameDiffModel, data: StimulusData, batch_size: int) -> tuple[float, float]:
    """(loss, accuracy) for scheduler steps and grid selection only."""
    model.eval()
    loss_sum, correct = 0.0, 0
    for x, y in data.iter_batches(batch_size):
        logits = model(x)
        loss_sum += _bce_loss(logits, y).item() * len(y)
        correct += int((logits.argmax(dim=1) == y).sum())
    return loss_sum / len(data), correct / len(data)


def train_model(
    spec: TrainSpec,
    train_data: StimulusData,
    val_data: StimulusData,
    lr: float,
    scheduler_name: str,
    optimizer_name: str,
    seed: int,
) -> tuple[SameDiffModel, dict]:
    torch.manual_seed(seed)
    model = SameDiffModel(build_backbone(spec.backbone, spec.pretraining))
    model.to(spec.device).train()
    opt = make_optimizer(optimizer_name, model.parameters(), lr)
    sched = make_scheduler(scheduler_name, opt)

    history = {"train_loss": [], "val_loss": []}
    for epoch in range(spec.epochs):
        model.train()
        loss_sum = 0.0
        for x, y in train_data.iter_batches(spec.batch_size, shuffle_seed=seed * 10_000 + epoch):
            opt.zero_grad()
            loss = _bce_loss(model(x), y)
            loss.backward()
            opt.step()
            loss_sum += loss.item() * len(y)
        history["train_loss"].append(loss_sum / len(train_data))
        val_loss, _ = _val_stats(model, val_data, spec.batch_size)
        history["val_loss"].append(val_loss)
        if scheduler_name == "plateau":
            sched.step(val_loss)
        else:
            sched.step()
    return model, history


def grid_search(spec: TrainSpec, train_data: StimulusData, val_data: StimulusData) -> dict:
    """Winner by in-distribution validation accuracy; ties keep grid order."""
    trials = []
    best = None
    for lr, sched, opt in product(spec.learning_rates, spec.schedulers, spec.optimizers):
        model, _ = train_model(spec, train_data, val_data, lr, sched, opt, seed=0)
        _, val_acc = _val_stats(model, val_data, spec.batch_size)
        trial = {"learning_rate": lr, "scheduler": sched, "optimizer": opt,
                 "val_accuracy": val_acc}
        trials.append(trial)
        if best is None or val_acc > best["val_accuracy"]:
            best = trial
    return {"trials": trials, "winner": best}


@torch.no_grad()
def predict_manifest(
    model: SameDiffModel, manifest_path, spec: TrainSpec, seed_id: int
) -> list[Prediction]:
    manifest = read_manifest(manifest_path)
    data = StimulusData(Path(manifest_path).parent, manifest.records)
    model.eval()
    rows: list[Prediction] = []
    pos = 0
    for x, _ in data.iter_batches(spec.batch_size):
        logits = model(x)
        probs = F.softmax(logits, dim=1)[:, 1]
        for j in range(len(x)):
            rows.append(Prediction(
                stimulus_id=data.ids[pos + j],
                score_same=float(probs[j]),
                logit_same=float(logits[j, 1]),
                logit_diff=float(logits[j, 0]),
                model_id=spec.model_id,
                seed_id=seed_id,
            ))
        pos += len(x)
    return rows


def _load_split(dataset_dir: Path, split: str) -> StimulusData:
    per_split = dataset_dir / f"manifest_{split}.jsonl"
    if per_split.exists():
        manifest = read_manifest(per_split)
        records = manifest.records
    else:
        records = read_manifest(dataset_dir / "manifest.jsonl").split(split)
    if not records:
        raise AdapterError(f"dataset {dataset_dir} has no {split} records")
    return StimulusData(dataset_dir, records)


def run_finetune(spec: TrainSpec) -> dict:
    dataset_dir = Path(spec.dataset_dir)
    out = Path(spec.out_dir)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)

    train_data = _load_split(dataset_dir, "train")
    val_data = _load_split(dataset_dir, "val")

    grid = grid_search(spec, train_data, val_data)
    (out / "grid.json").write_text(json.dumps(grid, indent=2, sort_keys=True) + "\n")
    win = grid["winner"]

    written = []
    for seed in range(spec.seeds):
        model, history = train_model(
            spec, train_data, val_data,
            win["learning_rate"], win["scheduler"], win["optimizer"], seed=seed,
        )
        ckpt = out / "checkpoints" / f"{spec.model_id}-seed{seed}.pt"
        save_checkpoint(ckpt, model, spec.backbone, spec.pretraining,
                        extra={"winner": win, "seed": seed, "history": history})
        for mpath in spec.test_manifests:
            rows = predict_manifest(model, mpath, spec, seed_id=seed)
            name = f"{spec.model_id}-seed{seed}-{Path(mpath).stem}.csv"
            write_predictions(out / "predictions" / name, 0.5, rows)
            written.append(str(out / "predictions" / name))
    return {"winner": win, "predictions": written}
