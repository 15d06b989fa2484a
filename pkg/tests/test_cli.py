"""End-to-end command-line behavior: exit codes, artifacts, reproducibility."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from relkit.checksums import checksum_pixels
from relkit.cli import main
from relkit.formats import (
    read_manifest,
    read_predictions,
    write_embeddings,
    write_labels,
    write_manifest,
    write_predictions,
)
from relkit.pngio import read_png, write_png
from relkit.records import EmbeddingMatrix, PredictionRecord, PredictionSet


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("RELKIT_SEED", raising=False)


def write_config(path, **kw):
    cfg = dict(
        source="noise", object_count=8, split_sizes=[4, 2, 2], stimuli_per_split=8
    )
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return path


def tree_digest(root, skip=()):
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file() and p.name not in skip:
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def perfect_predictions(manifest, with_logits=True):
    records = []
    for r in manifest.records:
        same = r.label == "same"
        records.append(
            PredictionRecord(
                stimulus_id=r.stimulus_id,
                score_same=0.9 if same else 0.1,
                predicted=r.label,
                model_id="oracle",
                seed_id=0,
                logit_same=2.0 if same else -2.0 if with_logits else None,
                logit_diff=-2.0 if same else 2.0 if with_logits else None,
            )
        )
    return PredictionSet(threshold=0.5, records=records)


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_gen")
    cfg = write_config(root / "config.json", root_seed=7)
    out = root / "ds"
    assert main(["generate", str(cfg), str(out)]) == 0
    return out


# ---------------------------------------------------------------- generate


def test_generate_artifacts(generated):
    assert (generated / "manifest.jsonl").is_file()
    assert (generated / "run.json").is_file()
    for split in ("train", "val", "test"):
        part = read_manifest(generated / f"manifest_{split}.jsonl")
        assert len(part.records) == 8
        assert all(r.split == split for r in part.records)
    run = json.loads((generated / "run.json").read_text())
    assert run["command"] == "generate" and run["root_seed"] == 7


def test_generate_rerun_is_byte_identical(generated, tmp_path):
    cfg = write_config(tmp_path / "config.json", root_seed=7)
    twin = tmp_path / "twin"
    assert main(["generate", str(cfg), str(twin)]) == 0
    assert tree_digest(twin) == tree_digest(generated)
    # and regenerating in place changes nothing
    before = tree_digest(generated)
    assert main(["generate", str(cfg), str(generated)]) == 0
    assert tree_digest(generated) == before


def test_env_seed_overrides_config(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "config.json", root_seed=7)
    monkeypatch.setenv("RELKIT_SEED", "123")
    env_out = tmp_path / "env"
    assert main(["generate", str(cfg), str(env_out)]) == 0
    monkeypatch.delenv("RELKIT_SEED")
    flag_out = tmp_path / "flag"
    assert main(["generate", str(cfg), str(flag_out), "--seed", "123"]) == 0
    base_out = tmp_path / "base"
    assert main(["generate", str(cfg), str(base_out)]) == 0
    assert tree_digest(env_out) == tree_digest(flag_out)
    assert tree_digest(env_out) != tree_digest(base_out)
    assert json.loads((env_out / "run.json").read_text())["root_seed"] == 123


def test_generate_variant_flag(tmp_path):
    cfg = write_config(tmp_path / "config.json", source="factorized", root_seed=3)
    out = tmp_path / "masked"
    assert main(["generate", str(cfg), str(out), "--variant", "masked"]) == 0
    manifest = read_manifest(out / "manifest.jsonl")
    img = read_png(out / manifest.records[0].image_path)
    flat = img.reshape(-1, 3)
    assert np.all(np.all(flat == 255, axis=1) | np.all(flat == 100, axis=1))
    assert main(["validate", str(out)]) == 0


def test_generate_single_object(tmp_path):
    cfg = write_config(
        tmp_path / "config.json", variant="single_object",
        object_count=5, split_sizes=[0, 0, 5], stimuli_per_split=3, root_seed=5,
    )
    out = tmp_path / "single"
    assert main(["generate", str(cfg), str(out)]) == 0
    manifest = read_manifest(out / "manifest.jsonl")
    assert len(manifest.records) == 3
    assert all(r.object_b is None for r in manifest.records)
    assert main(["validate", str(out)]) == 0


def test_generate_dissociation(tmp_path):
    cfg = write_config(
        tmp_path / "config.json", source="factorized", variant="dissociation:none",
        object_count=4, split_sizes=[0, 0, 4], stimuli_per_split=4, root_seed=9,
    )
    out = tmp_path / "dis"
    assert main(["generate", str(cfg), str(out)]) == 0
    for cond in ("none", "S", "T", "TS", "C", "CS", "CT", "CTS"):
        assert (out / f"dis-{cond}" / "manifest.jsonl").is_file()
        assert main(["validate", str(out / f"dis-{cond}")]) == 0


def test_generate_bad_config(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", stimuli_per_split=7)
    assert main(["generate", str(cfg), str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{nope")
    assert main(["generate", str(tmp_path / "broken.json"), str(tmp_path / "o")]) == 1
    assert main(["generate", str(tmp_path / "missing.json"), str(tmp_path / "o")]) == 2


def test_derive_variant(generated, tmp_path):
    out = tmp_path / "gray"
    assert main(["derive", str(generated), "grayscale", str(out)]) == 0
    assert main(["validate", str(out)]) == 0


def test_root_flag(tmp_path):
    write_config(tmp_path / "config.json", root_seed=7)
    assert main(["generate", "config.json", "ds", "--root", str(tmp_path)]) == 0
    assert (tmp_path / "ds" / "manifest.jsonl").is_file()
    assert main(["validate", "ds", "--root", str(tmp_path)]) == 0


# ---------------------------------------------------------------- validate


def test_validate_clean_and_tampered(generated, tmp_path, capsys):
    assert main(["validate", str(generated)]) == 0
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(generated, broken)
    manifest = read_manifest(broken / "manifest.jsonl")
    rec = manifest.records[0]
    img = read_png(broken / rec.image_path)
    img[0, 0, 0] ^= 0xFF
    write_png(broken / rec.image_path, img)
    capsys.readouterr()
    assert main(["validate", str(broken)]) == 3
    out = capsys.readouterr().out
    assert "checksum" in out


def test_validate_deleted_record(generated, tmp_path, capsys):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(generated, broken)
    manifest = read_manifest(broken / "manifest.jsonl")
    manifest.records.pop(0)
    write_manifest(manifest, broken / "manifest.jsonl")
    assert main(["validate", str(broken)]) == 3
    assert "balance" in capsys.readouterr().out


def test_validate_missing_dataset(tmp_path):
    assert main(["validate", str(tmp_path / "nowhere")]) == 2


# -------------------------------------------------------------------- eval


def test_eval_single_file(generated, tmp_path, capsys):
    manifest = read_manifest(generated / "manifest_test.jsonl")
    pred_path = tmp_path / "preds.csv"
    write_predictions(perfect_predictions(manifest), pred_path)
    rc = main(["eval", "--pred", str(pred_path), "--manifest",
               str(generated / "manifest_test.jsonl"), "--out", str(tmp_path / "rep")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "accuracy,1.000000" in out
    assert "pct_pred_same,50.0000" in out
    report = (tmp_path / "rep" / "report.csv").read_text()
    assert "auc,1.000000" in report


def test_eval_matrix(generated, tmp_path):
    mpath = generated / "manifest_test.jsonl"
    manifest = read_manifest(mpath)
    pred_path = tmp_path / "p.csv"
    write_predictions(perfect_predictions(manifest), pred_path)
    cell = f"SQU:SQU:{pred_path}:{mpath}"
    cell2 = f"SQU:ALPH:{pred_path}:{mpath}"
    cell3 = f"ALPH:SQU:{pred_path}:{mpath}"
    cell4 = f"ALPH:ALPH:{pred_path}:{mpath}"
    rc = main(["eval", "--cell", cell, "--cell", cell2, "--cell", cell3,
               "--cell", cell4, "--matrix", "--out", str(tmp_path / "rep")])
    assert rc == 0
    matrix = (tmp_path / "rep" / "matrix.csv").read_text()
    assert matrix.splitlines()[0] == "train\\test,SQU,ALPH,avg"
    assert "100.0" in matrix
    assert (tmp_path / "rep" / "cells.csv").is_file()


def test_eval_id_mismatch(generated, tmp_path):
    manifest = read_manifest(generated / "manifest_test.jsonl")
    preds = perfect_predictions(manifest)
    preds.records[0].stimulus_id = "ghost-000000"
    pred_path = tmp_path / "p.csv"
    write_predictions(preds, pred_path)
    rc = main(["eval", "--pred", str(pred_path), "--manifest",
               str(generated / "manifest_test.jsonl")])
    assert rc == 1


def test_eval_dissociation(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "config.json", source="factorized", variant="dissociation:none",
        object_count=4, split_sizes=[0, 0, 4], stimuli_per_split=4, root_seed=9,
    )
    out = tmp_path / "dis"
    assert main(["generate", str(cfg), str(out)]) == 0
    cells = []
    for cond in ("none", "S", "T", "TS", "C", "CS", "CT", "CTS"):
        mpath = out / f"dis-{cond}" / "manifest.jsonl"
        manifest = read_manifest(mpath)
        records = [
            PredictionRecord(
                stimulus_id=r.stimulus_id, score_same=0.9, predicted="same",
                model_id="collapse", seed_id=0,
            )
            for r in manifest.records
        ]
        ppath = tmp_path / f"{cond}.csv"
        write_predictions(PredictionSet(0.5, records), ppath)
        cells += ["--cell", f"{cond}:{ppath}:{mpath}"]
    capsys.readouterr()
    rc = main(["eval", "--dissociation", *cells, "--out", str(tmp_path / "rep")])
    assert rc == 0
    text = (tmp_path / "rep" / "proportions.csv").read_text()
    assert text.splitlines()[1].count("1.0000") == 8


def test_eval_needs_inputs():
    assert main(["eval"]) == 1


# ------------------------------------------------------------------ analyze


def test_analyze_pairwise(tmp_path):
    rng = np.random.default_rng(0)
    emb = EmbeddingMatrix(
        ids=[f"e{i}" for i in range(10)], rows=rng.standard_normal((10, 4))
    )
    epath = tmp_path / "embs.bin"
    write_embeddings(emb, epath)
    rc = main(["analyze", "--pairwise", str(epath), "--out", str(tmp_path / "rep")])
    assert rc == 0
    summary = (tmp_path / "rep" / "embs-pairwise.csv").read_text()
    assert summary.splitlines()[1].startswith("embs,10,45,")
    hist = (tmp_path / "rep" / "embs-hist.csv").read_text()
    assert sum(int(l.split(",")[2]) for l in hist.splitlines()[1:]) == 45


def test_analyze_threshold(tmp_path, capsys):
    rng = np.random.default_rng(1)
    spread = EmbeddingMatrix(
        ids=[f"a{i}" for i in range(12)], rows=rng.standard_normal((12, 8))
    )
    collapsed = EmbeddingMatrix(
        ids=[f"b{i}" for i in range(12)],
        rows=np.tile(rng.standard_normal(8).astype(np.float32), (12, 1)),
    )
    ref_path, sp, cp = tmp_path / "ref.bin", tmp_path / "spread.bin", tmp_path / "collapsed.bin"
    write_embeddings(spread, ref_path)
    write_embeddings(spread, sp)
    write_embeddings(collapsed, cp)
    rc = main(["analyze", "--threshold", "--reference", str(ref_path),
               str(sp), str(cp), "--out", str(tmp_path / "rep")])
    assert rc == 0
    text = (tmp_path / "rep" / "threshold.csv").read_text()
    assert "spread" in text and "expected_ok" in text
    assert "collapsed" in text and "expected_fail" in text


def test_analyze_probe(tmp_path):
    rng = np.random.default_rng(2)
    n = 20
    rows = np.vstack([
        rng.normal(2.0, 0.2, size=(n // 2, 3)),
        rng.normal(-2.0, 0.2, size=(n // 2, 3)),
    ]).astype(np.float32)
    ids = [f"s{i}" for i in range(n)]
    labels = ["same"] * (n // 2) + ["different"] * (n // 2)
    epath, lpath = tmp_path / "e.bin", tmp_path / "l.csv"
    write_embeddings(EmbeddingMatrix(ids=ids, rows=rows), epath)
    write_labels(lpath, ids, labels)
    rc = main(["analyze", "--probe", str(epath), "--labels", str(lpath),
               "--out", str(tmp_path / "rep")])
    assert rc == 0
    metrics = json.loads((tmp_path / "rep" / "probe-metrics.json").read_text())
    assert metrics["accuracy"] == 1.0
    pset = read_predictions(tmp_path / "rep" / "probe-predictions.csv")
    assert len(pset.records) == n


def test_analyze_requires_mode(tmp_path):
    assert main(["analyze", str(tmp_path / "x.bin")]) == 1


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", "--pairwise", str(tmp_path / "x.bin")]) == 2


# -------------------------------------------------------------------- sweep


def test_sweep_cells(tmp_path):
    cfg = write_config(
        tmp_path / "config.json", object_count=4, split_sizes=[4, 0, 0],
        stimuli_per_split=4, root_seed=3,
    )
    out = tmp_path / "grid"
    rc = main(["sweep", str(cfg), str(out), "--objects", "2,4", "--stimuli", "4"])
    assert rc == 0
    for cell in ("u2-s4", "u4-s4"):
        assert main(["validate", str(out / cell)]) == 0
    assert (out / "run.json").is_file()


def test_sweep_bad_lists(tmp_path):
    cfg = write_config(tmp_path / "config.json")
    assert main(["sweep", str(cfg), str(tmp_path / "g"), "--objects", "two",
                 "--stimuli", "4"]) == 1


# ------------------------------------------------------------------ plumbing


def test_module_invocation_smoke(tmp_path):
    cfg = write_config(tmp_path / "config.json", root_seed=7)
    proc = subprocess.run(
        [sys.executable, "-m", "relkit.cli", "generate", "config.json", "ds",
         "--root", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "generated" in proc.stdout
    assert (tmp_path / "ds" / "manifest.jsonl").is_file()


def test_checksums_in_manifest_match_images(generated):
    manifest = read_manifest(generated / "manifest.jsonl")
    rec = manifest.records[0]
    img = read_png(generated / rec.image_path)
    assert manifest.image_checksums[rec.image_path] == checksum_pixels(img)
