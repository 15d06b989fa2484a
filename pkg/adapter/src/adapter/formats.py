"""Readers and writers for the dataset toolkit's file formats.

Implemented from the format definitions, independently of the toolkit:

- manifest: JSON Lines; a header object {format_version, dataset_id, ...}
  then one stimulus record per line
- predictions: CSV with a `# threshold=<real>` preamble and columns
  stimulus_id,score_same,logit_same,logit_diff,predicted,model_id,seed_id;
  predicted is "same" exactly when score_same >= threshold
- embeddings: one ASCII JSON header line {count, dim, dtype:"f32le"},
  then per row a u32le id length, the UTF-8 id, and dim f32le values
- labels: CSV of stimulus_id,label
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

PREDICTION_COLUMNS = [
    "stimulus_id", "score_same", "logit_same", "logit_diff",
    "predicted", "model_id", "seed_id",
]


class AdapterFormatError(ValueError):
    """A file does not follow the expected format."""


@dataclass(frozen=True)
class Stimulus:
    stimulus_id: str
    label: str
    split: str
    image_path: str


@dataclass(frozen=True)
class Manifest:
    dataset_id: str
    records: list[Stimulus]

    def split(self, name: str) -> list[Stimulus]:
        return [r for r in self.records if r.split == name]


def read_manifest(path) -> Manifest:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise AdapterFormatError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("format_version") != FORMAT_VERSION:
        raise AdapterFormatError(
            f"{path}: format_version {header.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    records = []
    for line in lines[1:]:
        d = json.loads(line)
        records.append(
            Stimulus(d["stimulus_id"], d["label"], d["split"], d["image_path"])
        )
    return Manifest(dataset_id=header["dataset_id"], records=records)


@dataclass(frozen=True)
class Prediction:
    stimulus_id: str
    score_same: float
    logit_same: float | None
    logit_diff: float | None
    model_id: str
    seed_id: int


def write_predictions(path, threshold: float, rows: list[Prediction]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PREDICTION_COLUMNS)
    for r in rows:
        # the reader enforces this equivalence; emit it, never store it
        predicted = "same" if r.score_same >= threshold else "different"
        w.writerow([
            r.stimulus_id,
            repr(float(r.score_same)),
            "" if r.logit_same is None else repr(float(r.logit_same)),
            "" if r.logit_diff is None else repr(float(r.logit_diff)),
            predicted,
            r.model_id,
            r.seed_id,
        ])
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# threshold={threshold!r}\n")
        f.write(buf.getvalue())


def write_embeddings(path, ids: list[str], rows: np.ndarray) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] != len(ids):
        raise AdapterFormatError(f"rows {rows.shape} do not match {len(ids)} ids")
    if not np.isfinite(rows).all():
        raise AdapterFormatError("embedding rows must be finite")
    header = {"count": len(ids), "dim": int(rows.shape[1]), "dtype": "f32le"}
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for i, sid in enumerate(ids):
            raw = sid.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(rows[i].tobytes())


def write_labels(path, ids: list[str], labels: list[str]) -> None:
    if len(ids) != len(labels):
        raise AdapterFormatError("ids and labels must align")
    with open(path, "w", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["stimulus_id", "label"])
        for sid, lab in zip(ids, labels):
            w.writerow([sid, lab])
