"""Command line: adapter finetune|embed|probe-export --spec spec.json."""

from __future__ import annotations

import argparse
import sys

from adapter.formats import AdapterFormatError
from adapter.models import AdapterError
from adapter.train import TrainSpec, run_finetune

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Fine-tune vision backbones on same-different datasets "
                    "and export predictions and embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("finetune", "grid-search, train seeded replicates, write predictions"),
        ("embed", "embed a manifest's images with a frozen model"),
        ("probe-export", "frozen-backbone features plus a label sidecar"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--spec", required=True, help="JSON spec file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "finetune":
            spec = TrainSpec.from_json(args.spec)
            result = run_finetune(spec)
            win = result["winner"]
            print(f"winner: lr={win['learning_rate']} {win['scheduler']} "
                  f"{win['optimizer']} (val acc {win['val_accuracy']:.4f})")
            for path in result["predictions"]:
                print(f"wrote {path}")
        elif args.command == "embed":
            from adapter.export import load_spec, run_embed

            result = run_embed(load_spec(args.spec, {"manifest", "out"}))
            print(f"embedded {result['count']} images, dim {result['dim']}")
        else:
            from adapter.export import load_spec, run_probe_export

            result = run_probe_export(
                load_spec(args.spec, {"dataset_dir", "out_embeddings", "out_labels"})
            )
            print(f"exported {result['count']} {result['split']} embeddings, "
                  f"dim {result['dim']}")
    except (AdapterError, AdapterFormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
