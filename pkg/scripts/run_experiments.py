#!/usr/bin/env python3
"""Run the full evaluation: feature-model suite, neural suite, ensembles.

Thin driver over the CLI. With the reference corpus and default
hyperparameters the neural suite trains sixty models (6 variants x 10
folds) in pure numpy, which takes a long time; trim --epochs/--hidden or
--folds for a quicker pass.

Usage:
  python3 scripts/run_experiments.py --corpus corpus.json \
      --category-lexicon liwc.txt --emotion-lexicon nrc.txt \
      --embeddings vectors.txt --embedding-dim 300 --out results/
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hatecontext.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--category-lexicon", required=True)
    parser.add_argument("--emotion-lexicon", required=True)
    parser.add_argument("--embeddings", required=True)
    parser.add_argument("--embedding-dim", type=int, default=300)
    parser.add_argument("--out", default="results")
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--hidden", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--batch-size", type=int, default=128)
    args = parser.parse_args()

    common = [
        "--corpus", args.corpus,
        "--folds", str(args.folds),
        "--seed", str(args.seed),
        "--jobs", str(args.jobs),
    ]
    lex = [
        "--category-lexicon", args.category_lexicon,
        "--emotion-lexicon", args.emotion_lexicon,
    ]
    nn = [
        "--embeddings", args.embeddings,
        "--embedding-dim", str(args.embedding_dim),
        "--hidden", str(args.hidden),
        "--epochs", str(args.epochs),
        "--batch-size", str(args.batch_size),
    ]

    for name, extra in (
        ("lr", ["--suite", "lr"] + lex),
        ("nn", ["--suite", "nn"] + nn),
        ("ensemble", ["--suite", "ensemble"] + lex + nn),
    ):
        out_dir = os.path.join(args.out, name)
        print(f"=== suite {name} -> {out_dir}")
        code = cli_main(["evaluate"] + common + extra + ["--out", out_dir])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
