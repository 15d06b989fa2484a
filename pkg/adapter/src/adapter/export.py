"""Embedding exports: single-object embeddings and frozen-probe features.

Both run the backbone in eval mode under no_grad, so identical inputs
give byte-identical output files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from adapter.data import StimulusData
from adapter.formats import read_manifest, write_embeddings, write_labels
from adapter.models import AdapterError, SameDiffModel, build_backbone, load_checkpoint


def _resolve_model(spec: dict) -> SameDiffModel:
    if "checkpoint" in spec:
        model, _ = load_checkpoint(spec["checkpoint"])
        return model
    if "backbone" not in spec:
        raise AdapterError("spec needs either 'checkpoint' or 'backbone'")
    torch.manual_seed(int(spec.get("seed", 0)))
    return SameDiffModel(
        build_backbone(spec["backbone"], spec.get("pretraining", "random"))
    )


@torch.no_grad()
def _embed_records(model: SameDiffModel, image_root, records, batch_size: int) -> np.ndarray:
    data = StimulusData(image_root, records)
    model.eval()
    chunks = [model.embed(x).numpy() for x, _ in data.iter_batches(batch_size)]
    return np.concatenate(chunks, axis=0).astype(np.float32)


def load_spec(path, required: set[str]) -> dict:
    spec = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = required - set(spec)
    if missing:
        raise AdapterError(f"spec is missing keys: {sorted(missing)}")
    return spec


def run_embed(spec: dict) -> dict:
    """spec: manifest, out, and checkpoint | backbone [+ pretraining, seed, batch_size]."""
    model = _resolve_model(spec)
    manifest_path = Path(spec["manifest"])
    manifest = read_manifest(manifest_path)
    rows = _embed_records(
        model, manifest_path.parent, manifest.records, int(spec.get("batch_size", 64))
    )
    write_embeddings(spec["out"], [r.stimulus_id for r in manifest.records], rows)
    return {"count": len(manifest.records), "dim": int(rows.shape[1])}


def run_probe_export(spec: dict) -> dict:
    """spec: dataset_dir, out_embeddings, out_labels [+ split, model keys, seed]."""
    model = _resolve_model(spec)
    dataset_dir = Path(spec["dataset_dir"])
    split = spec.get("split", "train")
    per_split = dataset_dir / f"manifest_{split}.jsonl"
    if per_split.exists():
        records = read_manifest(per_split).records
    else:
        records = read_manifest(dataset_dir / "manifest.jsonl").split(split)
    if not records:
        raise AdapterError(f"dataset {dataset_dir} has no {split} records")
    rows = _embed_records(model, dataset_dir, records, int(spec.get("batch_size", 64)))
    write_embeddings(spec["out_embeddings"], [r.stimulus_id for r in records], rows)
    write_labels(spec["out_labels"], [r.stimulus_id for r in records],
                 [r.label for r in records])
    return {"count": len(records), "dim": int(rows.shape[1]), "split": split}
