"""On-disk formats: manifest JSONL, prediction CSV, embedding binary.

Manifest: JSON Lines.  The first line is a header object with keys
{format_version, dataset_id, root_seed, config, object_splits}; every
following line is one stimulus record.  Image checksums ride on the records
as a 16-hex-digit "checksum" field keyed by that record's image_path.

Predictions: CSV preceded by a comment line ``# threshold=<real>``; header
row ``stimulus_id,score_same,logit_same,logit_diff,predicted,model_id,seed_id``.
The predicted column must equal "same" exactly when score_same >= threshold.

Embeddings: one ASCII JSON header line {"count", "dim", "dtype": "f32le"}
terminated by a newline, then `count` rows; each row is a 4-byte little-endian
id length, the UTF-8 id bytes, then `dim` little-endian float32 values.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from relkit.records import (
    DatasetManifest,
    EmbeddingMatrix,
    PredictionRecord,
    PredictionSet,
    StimulusRecord,
)

FORMAT_VERSION = 1

PREDICTION_COLUMNS = [
    "stimulus_id",
    "score_same",
    "logit_same",
    "logit_diff",
    "predicted",
    "model_id",
    "seed_id",
]


class FormatError(Exception):
    """Malformed or incompatible artifact file."""


# ---------------------------------------------------------------- manifests


def write_manifest(manifest: DatasetManifest, path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "dataset_id": manifest.dataset_id,
        "root_seed": manifest.root_seed,
        "config": manifest.config,
        "object_splits": manifest.object_splits,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in manifest.records:
            d = rec.to_dict()
            cs = manifest.image_checksums.get(rec.image_path)
            if cs is not None:
                d["checksum"] = f"{cs:016x}"
            f.write(json.dumps(d, sort_keys=True) + "\n")


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FormatError(f"cannot read manifest {path}: {e}") from e
    if not lines:
        raise FormatError(f"empty manifest {path}")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed manifest header: {e}") from e
    if not isinstance(header, dict) or "format_version" not in header:
        raise FormatError("manifest header missing format_version")
    if header["format_version"] != FORMAT_VERSION:
        raise FormatError(
            f"manifest format_version {header['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    for key in ("dataset_id", "root_seed", "config", "object_splits"):
        if key not in header:
            raise FormatError(f"manifest header missing {key!r}")
    records: list[StimulusRecord] = []
    checksums: dict[str, int] = {}
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            rec = StimulusRecord.from_dict(d)
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise FormatError(f"malformed record at line {ln}: {e}") from e
        records.append(rec)
        if "checksum" in d:
            checksums[rec.image_path] = int(d["checksum"], 16)
    return DatasetManifest(
        dataset_id=header["dataset_id"],
        root_seed=header["root_seed"],
        config=header["config"],
        records=records,
        object_splits={k: list(v) for k, v in header["object_splits"].items()},
        image_checksums=checksums,
    )


# -------------------------------------------------------------- predictions


def _fmt_opt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def write_predictions(pred: PredictionSet, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PREDICTION_COLUMNS)
    for r in pred.records:
        w.writerow(
            [
                r.stimulus_id,
                repr(float(r.score_same)),
                _fmt_opt(r.logit_same),
                _fmt_opt(r.logit_diff),
                r.predicted,
                r.model_id,
                r.seed_id,
            ]
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# threshold={pred.threshold!r}\n")
        f.write(buf.getvalue())


def read_predictions(path) -> PredictionSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read predictions {path}: {e}") from e
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# threshold="):
        raise FormatError("predictions file missing '# threshold=' preamble")
    try:
        threshold = float(lines[0].split("=", 1)[1])
    except ValueError as e:
        raise FormatError(f"bad threshold value: {e}") from e
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("predictions file missing header row") from None
    if header != PREDICTION_COLUMNS:
        raise FormatError(f"unexpected prediction columns {header}")
    records = []
    for ln, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != len(PREDICTION_COLUMNS):
            raise FormatError(f"line {ln}: expected {len(PREDICTION_COLUMNS)} fields")
        sid, score, lsame, ldiff, predicted, model_id, seed_id = row
        try:
            rec = PredictionRecord(
                stimulus_id=sid,
                score_same=float(score),
                logit_same=float(lsame) if lsame else None,
                logit_diff=float(ldiff) if ldiff else None,
                predicted=predicted,
                model_id=model_id,
                seed_id=int(seed_id),
            )
        except ValueError as e:
            raise FormatError(f"line {ln}: {e}") from e
        want = "same" if rec.score_same >= threshold else "different"
        if rec.predicted != want:
            raise FormatError(
                f"line {ln}: predicted={rec.predicted!r} inconsistent with "
                f"score {rec.score_same} at threshold {threshold}"
            )
        records.append(rec)
    return PredictionSet(threshold=threshold, records=records)


# --------------------------------------------------------------- embeddings


def write_embeddings(emb: EmbeddingMatrix, path) -> None:
    header = {"count": len(emb.ids), "dim": emb.dim, "dtype": "f32le"}
    rows = np.ascontiguousarray(emb.rows, dtype="<f4")
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for i, oid in enumerate(emb.ids):
            raw = oid.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(rows[i].tobytes())


def read_embeddings(path) -> EmbeddingMatrix:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read embeddings {path}: {e}") from e
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("embeddings file missing header line")
    try:
        header = json.loads(data[:nl].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"malformed embeddings header: {e}") from e
    for key in ("count", "dim", "dtype"):
        if key not in header:
            raise FormatError(f"embeddings header missing {key!r}")
    if header["dtype"] != "f32le":
        raise FormatError(f"unsupported embedding dtype {header['dtype']!r}")
    count, dim = int(header["count"]), int(header["dim"])
    if count < 0 or dim <= 0:
        raise FormatError(f"bad embeddings shape count={count} dim={dim}")
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    off = nl + 1
    row_bytes = dim * 4
    for i in range(count):
        if off + 4 > len(data):
            raise FormatError(f"truncated embeddings file: row {i} of {count} missing")
        (idlen,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + idlen + row_bytes > len(data):
            raise FormatError(f"truncated embeddings file: row {i} of {count} short")
        ids.append(data[off : off + idlen].decode("utf-8"))
        off += idlen
        rows[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=off)
        off += row_bytes
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes after last row")
    return EmbeddingMatrix(ids=ids, rows=rows)


# ------------------------------------------------------------------- labels


def write_labels(path, ids: list[str], labels: list[str]) -> None:
    """Label sidecar for probe training: CSV of stimulus_id,label."""
    if len(ids) != len(labels):
        raise ValueError("ids and labels must align")
    with open(path, "w", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["stimulus_id", "label"])
        for sid, lab in zip(ids, labels):
            w.writerow([sid, lab])


def read_labels(path) -> dict[str, str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FormatError(f"cannot read labels {path}: {e}") from e
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty labels file") from None
    if header != ["stimulus_id", "label"]:
        raise FormatError(f"unexpected labels header {header}")
    out: dict[str, str] = {}
    for ln, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2 or row[1] not in ("same", "different"):
            raise FormatError(f"labels line {ln}: bad row {row}")
        out[row[0]] = row[1]
    return out
