"""pairscorer CLI: init-base | train | score."""

from __future__ import annotations

import argparse
import sys

from .model import init_base
from .records import RecordError
from .scoring import score
from .training import FineTuneConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairscorer",
        description="Cross-encoder scorer speaking the pair-exchange JSONL protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-base", help="materialize a small offline base model")
    p.add_argument("--pairs", nargs="+", required=True,
                   help="pairs files whose text defines the vocabulary")
    p.add_argument("--out", required=True, help="base model output directory")
    p.add_argument("--hidden-size", type=int, default=128)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--max-seq-len", type=int, default=128)
    p.add_argument("--seed", type=int, default=13)

    p = sub.add_parser("train", help="fine-tune a sentence-pair classifier")
    p.add_argument("--pairs", required=True, help="labeled pairs JSONL")
    p.add_argument("--dev", help="labeled dev pairs JSONL (default: the training file)")
    p.add_argument("--base-model", required=True,
                   help="hub name or local directory of the pretrained base")
    p.add_argument("--out", required=True, help="model artifact directory")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=3e-5)
    p.add_argument("--max-seq-len", type=int, default=128)
    p.add_argument("--seed", type=int, default=13)

    p = sub.add_parser("score", help="emit P(label=1) for every pair")
    p.add_argument("--pairs", required=True, help="pairs JSONL (labels optional)")
    p.add_argument("--model", required=True, help="trained model directory")
    p.add_argument("--out", required=True, help="scores JSONL destination")
    p.add_argument("--batch-size", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init-base":
            out = init_base(args.pairs, args.out, hidden_size=args.hidden_size,
                            num_layers=args.layers, num_heads=args.heads,
                            max_seq_len=args.max_seq_len, seed=args.seed)
            print(f"init-base: wrote {out}")
        elif args.command == "train":
            config = FineTuneConfig(
                base_model=args.base_model,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.learning_rate,
                max_seq_len=args.max_seq_len,
                seed=args.seed,
            )
            result = train(args.pairs, config, args.out, dev_path=args.dev)
            accuracy = result.epoch_dev_accuracy[result.best_epoch - 1]
            print(f"train: kept epoch {result.best_epoch} "
                  f"(dev group-argmax accuracy {accuracy:.3f}) -> {result.out_dir}")
        elif args.command == "score":
            out = score(args.pairs, args.model, args.out, batch_size=args.batch_size)
            print(f"score: wrote {out}")
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
