"""Command-line entry point: generate, validate, eval, analyze, sweep.

Exit codes: 0 success, 1 invalid config or arguments, 2 I/O or file-format
failure, 3 validation violations.  Diagnostics go to stderr; reports and
summaries go to stdout.  Every run that has an output directory writes a
``run.json`` echo of its effective configuration (no volatile paths, so
reruns stay byte-identical).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from relkit.compose import (
    ConfigError,
    GenerationConfig,
    build_dataset,
    build_dissociation_sets,
    build_single_object_set,
    build_sweep,
    build_variant,
)
from relkit.embeddings import (
    AnalysisError,
    format_histogram_csv,
    pairwise_summary,
    probe_predict,
    threshold_predict,
    train_probe,
)
from relkit.formats import (
    FormatError,
    read_embeddings,
    read_labels,
    read_manifest,
    read_predictions,
    write_manifest,
    write_predictions,
)
from relkit.metrics import (
    EvalError,
    evaluate,
    format_matrix,
    format_proportions,
    generalization_matrix,
    mean_logit_by_class,
    proportion_same,
)
from relkit.objects import build_object_set
from relkit.records import DatasetManifest
from relkit.squiggles import SquiggleSpec
from relkit.validate import validate_dataset

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_VIOLATIONS = 3


class CliError(ValueError):
    """Bad command-line usage (maps to exit 1)."""


def _resolve(root: str, p: str) -> Path:
    return Path(root) / p


def _effective_seed(args, config_seed: int | None) -> int:
    env = os.environ.get("RELKIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"RELKIT_SEED must be an integer, got {env!r}") from None
    if getattr(args, "seed", None) is not None:
        return args.seed
    if config_seed is not None:
        return config_seed
    return 0


def _write_run_json(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run.json", "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_config(path: Path) -> tuple[GenerationConfig, int | None]:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CliError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise CliError(f"config {path} must be a JSON object")
    seed = raw.pop("root_seed", None)
    if seed is not None and not isinstance(seed, int):
        raise CliError("root_seed must be an integer")
    cfg = GenerationConfig.from_dict(raw)
    return cfg, seed


def _split_manifest(manifest: DatasetManifest, split: str) -> DatasetManifest:
    """Self-consistent manifest narrowed to one split."""
    records = [r for r in manifest.records if r.split == split]
    paths = {r.image_path for r in records}
    cfg = dict(manifest.config)
    sizes = list(cfg.get("split_sizes", [0, 0, 0]))
    narrowed = [0, 0, 0]
    idx = {"train": 0, "val": 1, "test": 2}[split]
    narrowed[idx] = sizes[idx]
    cfg["split_sizes"] = narrowed
    splits = {s: (ids if s == split else []) for s, ids in manifest.object_splits.items()}
    return DatasetManifest(
        dataset_id=manifest.dataset_id,
        root_seed=manifest.root_seed,
        config=cfg,
        records=records,
        object_splits=splits,
        image_checksums={k: v for k, v in manifest.image_checksums.items() if k in paths},
    )


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    cfg, config_seed = _load_config(_resolve(args.root, args.config))
    if args.variant:
        cfg = replace(cfg, variant=args.variant)
        if args.variant == "aligned":
            cfg = replace(cfg, placement_mode="aligned")
    seed = _effective_seed(args, config_seed)
    out = _resolve(args.root, args.out)

    if cfg.condition or cfg.variant.startswith("dissociation"):
        manifests = build_dissociation_sets(
            out, seed, stimuli=cfg.stimuli_per_split, unique_objects=cfg.object_count
        )
        _write_run_json(out, {"command": "generate", "root_seed": seed,
                              "config": cfg.to_dict()})
        for cond, m in sorted(manifests.items()):
            print(f"generated dis-{cond}: {len(m.records)} stimuli")
        return EXIT_OK

    if cfg.variant == "single_object":
        objects = build_object_set(
            cfg.source, cfg.object_count, seed,
            squiggle_spec=SquiggleSpec(**cfg.squiggle) if cfg.squiggle else SquiggleSpec(),
            import_dir=cfg.import_dir,
        )
        manifest = build_single_object_set(
            objects, cfg.stimuli_per_split, seed, out,
            dataset_id=cfg.effective_id, source=cfg.source,
        )
    else:
        manifest = build_dataset(cfg, seed, out)
        for split in ("train", "val", "test"):
            part = _split_manifest(manifest, split)
            if part.records:
                write_manifest(part, out / f"manifest_{split}.jsonl")

    _write_run_json(out, {"command": "generate", "root_seed": seed,
                          "config": cfg.to_dict()})
    print(f"generated {manifest.dataset_id}: {len(manifest.records)} stimuli -> {out}")
    return EXIT_OK


def cmd_derive(args) -> int:
    base = _resolve(args.root, args.dataset)
    out = _resolve(args.root, args.out)
    manifest = build_variant(base, args.kind, out)
    _write_run_json(out, {"command": "derive", "kind": args.kind,
                          "config": manifest.config})
    print(f"generated {manifest.dataset_id}: {len(manifest.records)} stimuli -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- validate


def cmd_validate(args) -> int:
    root = _resolve(args.root, args.dataset)
    manifest = read_manifest(root / "manifest.jsonl")
    report = validate_dataset(manifest, root)
    _write_run_json(root, {"command": "validate", "dataset": manifest.dataset_id})
    if report.ok:
        print(f"ok: {manifest.dataset_id} ({len(manifest.records)} records)")
        return EXIT_OK
    for v in report.violations:
        print(str(v))
    print(f"{len(report.violations)} violations in {manifest.dataset_id}")
    return EXIT_VIOLATIONS


# -------------------------------------------------------------------- eval


def _parse_cell(spec: str, n_fields: int) -> list[str]:
    parts = spec.split(":")
    if len(parts) != n_fields:
        raise CliError(f"cell spec needs {n_fields} ':'-separated fields: {spec!r}")
    return parts


def _write_report(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def cmd_eval(args) -> int:
    out = _resolve(args.root, args.out) if args.out else None
    fmt = args.format

    if args.dissociation:
        preds_by, mans_by = {}, {}
        for spec in args.cell or []:
            cond, ppath, mpath = _parse_cell(spec, 3)
            preds_by[cond] = read_predictions(_resolve(args.root, ppath))
            mans_by[cond] = read_manifest(_resolve(args.root, mpath))
        props = proportion_same(preds_by, mans_by)
        text = format_proportions(props, fmt)
        print(text, end="")
        _write_report(out, f"proportions.{fmt}", text)
        if out:
            _write_run_json(out, {"command": "eval", "mode": "dissociation"})
        return EXIT_OK

    if args.cell:
        by_cell: dict[tuple[str, str], list[float]] = {}
        lines = ["train,test,accuracy,auc,n,td_pd,td_ps,ts_pd,ts_ps"]
        for spec in args.cell:
            train, test, ppath, mpath = _parse_cell(spec, 4)
            pset = read_predictions(_resolve(args.root, ppath))
            manifest = read_manifest(_resolve(args.root, mpath))
            r = evaluate(pset, manifest)
            by_cell.setdefault((train, test), []).append(r.accuracy)
            c = r.confusion
            lines.append(
                f"{train},{test},{r.accuracy:.6f},{r.auc:.6f},{r.n},"
                f"{c.td_pd},{c.td_ps},{c.ts_pd},{c.ts_ps}"
            )
        cells_text = "\n".join(lines) + "\n"
        print(cells_text, end="")
        _write_report(out, "cells.csv", cells_text)
        if args.matrix:
            m = generalization_matrix(by_cell)
            text = format_matrix(m, fmt)
            print(text, end="")
            _write_report(out, f"matrix.{fmt}", text)
        if out:
            _write_run_json(out, {"command": "eval", "mode": "cells",
                                  "matrix": bool(args.matrix)})
        return EXIT_OK

    if not (args.pred and args.manifest):
        raise CliError("eval needs --cell specs or --pred with --manifest")
    pset = read_predictions(_resolve(args.root, args.pred))
    manifest = read_manifest(_resolve(args.root, args.manifest))
    r = evaluate(pset, manifest)
    c = r.confusion
    lines = [
        "metric,value",
        f"accuracy,{r.accuracy:.6f}",
        f"auc,{r.auc:.6f}",
        f"n,{r.n}",
        f"td_pd,{c.td_pd}", f"td_ps,{c.td_ps}", f"ts_pd,{c.ts_pd}", f"ts_ps,{c.ts_ps}",
    ]
    if all(rec.logit_same is not None for rec in pset.records):
        ml = mean_logit_by_class(pset, manifest)
        lines += [
            f"pct_pred_same,{ml.percent_predicted_same:.4f}",
            f"gt_same_logit,{ml.mean_logit_true_same:.6f}",
            f"gt_diff_logit,{ml.mean_logit_true_different:.6f}",
        ]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    _write_report(out, "report.csv", text)
    if out:
        _write_run_json(out, {"command": "eval", "mode": "single"})
    return EXIT_OK


# ------------------------------------------------------------------ analyze


def cmd_analyze(args) -> int:
    out = _resolve(args.root, args.out) if args.out else None
    did_anything = False

    if args.pairwise:
        did_anything = True
        if not args.embeddings:
            raise CliError("--pairwise needs at least one embeddings file")
        for epath in args.embeddings:
            emb = read_embeddings(_resolve(args.root, epath))
            s = pairwise_summary(emb, bins=args.bins)
            name = Path(epath).stem
            print(
                f"{name}: n={len(emb.ids)} pairs={s.pair_count} "
                f"mean={s.mean:.6f} variance={s.variance:.6f}"
            )
            _write_report(
                out, f"{name}-pairwise.csv",
                f"name,n,pair_count,mean,variance\n"
                f"{name},{len(emb.ids)},{s.pair_count},{s.mean!r},{s.variance!r}\n",
            )
            _write_report(out, f"{name}-hist.csv", format_histogram_csv(s))

    if args.threshold:
        did_anything = True
        if not args.reference:
            raise CliError("--threshold needs --reference embeddings")
        if not args.embeddings:
            raise CliError("--threshold needs embeddings files to flag")
        ref = pairwise_summary(
            read_embeddings(_resolve(args.root, args.reference)), bins=args.bins
        )
        means = {}
        for epath in args.embeddings:
            emb = read_embeddings(_resolve(args.root, epath))
            means[Path(epath).stem] = pairwise_summary(emb, bins=args.bins).mean
        flags = threshold_predict(ref.mean, means, margin=args.margin)
        lines = ["name,mean,reference_mean,flag"]
        for name in means:
            lines.append(f"{name},{means[name]!r},{ref.mean!r},{flags[name]}")
        text = "\n".join(lines) + "\n"
        print(text, end="")
        _write_report(out, "threshold.csv", text)

    if args.probe:
        did_anything = True
        if not args.embeddings or not args.labels:
            raise CliError("--probe needs an embeddings file and --labels")
        train_emb = read_embeddings(_resolve(args.root, args.embeddings[0]))
        labels = read_labels(_resolve(args.root, args.labels))
        model = train_probe(train_emb, labels, learning_rate=args.lr, epochs=args.epochs)
        if args.test:
            test_emb = read_embeddings(_resolve(args.root, args.test))
            test_labels = read_labels(_resolve(args.root, args.test_labels or args.labels))
        else:
            test_emb, test_labels = train_emb, labels
        pset = probe_predict(model, test_emb)
        correct = sum(1 for r in pset.records if r.predicted == test_labels.get(r.stimulus_id))
        acc = correct / len(pset.records)
        print(
            f"probe: train_loss={model.training_meta['final_loss']:.6f} "
            f"accuracy={acc:.6f} n={len(pset.records)}"
        )
        if out:
            out.mkdir(parents=True, exist_ok=True)
            write_predictions(pset, out / "probe-predictions.csv")
            (out / "probe-metrics.json").write_text(
                json.dumps({"accuracy": acc, **model.training_meta}, indent=2) + "\n"
            )

    if not did_anything:
        raise CliError("analyze needs --pairwise, --threshold, or --probe")
    if out:
        _write_run_json(out, {
            "command": "analyze",
            "pairwise": bool(args.pairwise),
            "threshold": bool(args.threshold),
            "probe": bool(args.probe),
            "bins": args.bins,
        })
    return EXIT_OK


# -------------------------------------------------------------------- sweep


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise CliError(f"expected comma-separated integers, got {text!r}") from None


def cmd_sweep(args) -> int:
    cfg, config_seed = _load_config(_resolve(args.root, args.config))
    seed = _effective_seed(args, config_seed)
    out = _resolve(args.root, args.out)
    grid = build_sweep(cfg, _int_list(args.objects), _int_list(args.stimuli), seed, out)
    _write_run_json(out, {
        "command": "sweep", "root_seed": seed, "config": cfg.to_dict(),
        "objects": _int_list(args.objects), "stimuli": _int_list(args.stimuli),
    })
    for (u, s), manifest in sorted(grid.items()):
        print(f"generated u{u}-s{s}: {len(manifest.records)} stimuli")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--root", default=".", help="base directory for relative paths")
    common.add_argument("--seed", type=int, default=None,
                        help="root seed (RELKIT_SEED env var wins)")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker count; outputs do not depend on it")

    p = argparse.ArgumentParser(prog="relkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="build a dataset from a config file")
    g.add_argument("config", help="generation config JSON")
    g.add_argument("out", help="output dataset directory")
    g.add_argument("--variant", default=None,
                   choices=["base", "grayscale", "masked", "flipped", "aligned",
                            "single_object"],
                   help="override the config's variant")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("derive", parents=[common],
                       help="re-render an existing dataset as a variant")
    d.add_argument("dataset", help="base dataset directory")
    d.add_argument("kind", choices=["grayscale", "masked", "flipped"])
    d.add_argument("out", help="output dataset directory")
    d.set_defaults(func=cmd_derive)

    v = sub.add_parser("validate", parents=[common], help="check every dataset invariant")
    v.add_argument("dataset", help="dataset directory (contains manifest.jsonl)")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("eval", parents=[common], help="score predictions against manifests")
    e.add_argument("--pred", default=None, help="prediction CSV (single-file mode)")
    e.add_argument("--manifest", default=None, help="manifest for --pred")
    e.add_argument("--cell", action="append", default=None,
                   help="train:test:predictions.csv:manifest.jsonl (repeatable)")
    e.add_argument("--matrix", action="store_true",
                   help="emit the train x test generalization matrix")
    e.add_argument("--dissociation", action="store_true",
                   help="cells are condition:predictions.csv:manifest.jsonl")
    e.add_argument("--format", default="csv", choices=["csv", "md"])
    e.add_argument("--out", default=None, help="directory for report files")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", parents=[common], help="embedding-space analyses")
    a.add_argument("embeddings", nargs="*", help="embedding files")
    a.add_argument("--pairwise", action="store_true",
                   help="pairwise cosine summary + histogram per file")
    a.add_argument("--bins", type=int, default=200, help="histogram bin count")
    a.add_argument("--threshold", action="store_true",
                   help="flag datasets against --reference mean similarity")
    a.add_argument("--reference", default=None, help="reference embeddings file")
    a.add_argument("--margin", type=float, default=0.0)
    a.add_argument("--probe", action="store_true",
                   help="train a linear probe on the first embeddings file")
    a.add_argument("--labels", default=None, help="labels CSV for --probe")
    a.add_argument("--test", default=None, help="held-out embeddings for --probe")
    a.add_argument("--test-labels", default=None)
    a.add_argument("--lr", type=float, default=0.1)
    a.add_argument("--epochs", type=int, default=500)
    a.add_argument("--out", default=None, help="directory for report files")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", parents=[common],
                       help="grid of datasets over object/stimulus counts")
    s.add_argument("config", help="base generation config JSON")
    s.add_argument("out", help="output root; one subdirectory per cell")
    s.add_argument("--objects", required=True, help="comma-separated unique-object counts")
    s.add_argument("--stimuli", required=True, help="comma-separated stimulus counts")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (CliError, ConfigError, EvalError, AnalysisError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
