#!/usr/bin/env python3
"""Generate a self-contained demo dataset: corpus, lexicons, embeddings.

The demo corpus is synthetic. Hateful comments usually (not always) contain
one of a few marker tokens, so models trained on it separate the classes
well but not perfectly, which makes suite output worth looking at. Writes
corpus.json, category_lexicon.txt, emotion_lexicon.txt, and embeddings.txt
into the target directory.

Usage: python3 scripts/make_demo_data.py [OUT_DIR] [--seed N] [--comments N]
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hatecontext.corpus import Comment, Corpus, Thread, save_corpus
from hatecontext.encoder import EmbeddingTable, save_embeddings
from hatecontext.features import EMOTIONS

HATE_MARKERS = ["vermin", "filth", "degenerates", "parasites"]
CALM_MARKERS = ["reasonable", "thoughtful", "informative", "constructive"]
FILLERS = [
    "the", "article", "says", "people", "should", "read", "this", "before",
    "posting", "anything", "about", "policy", "numbers", "again", "really",
]
TITLES = [
    "City council votes on new housing policy after long debate",
    "Study finds commute times rising in major metro areas",
    "Local school board weighs budget changes for next year",
    "State lawmakers argue over infrastructure funding bill",
    "New report examines trends in regional employment",
]
ANGRY_USERS = ["furycaps", "mad_max_77", "boilingpoint", "stormrant"]
CALM_USERS = ["evenkeel", "quietobserver", "midwestreader", "factsfirst", "casualscroller"]


def build_corpus(n_comments: int, seed: int) -> Corpus:
    rng = np.random.default_rng(seed)
    n_threads = len(TITLES)
    per_thread = [[] for _ in range(n_threads)]
    n_pos = int(round(n_comments * 0.3))
    labels = np.array([1] * n_pos + [0] * (n_comments - n_pos))
    rng.shuffle(labels)
    for i, label in enumerate(labels):
        words = list(rng.choice(FILLERS, size=int(rng.integers(4, 9))))
        # 85% of each class carries its marker; the rest is ambiguous
        if rng.random() < 0.85:
            pool = HATE_MARKERS if label == 1 else CALM_MARKERS
            words.insert(int(rng.integers(len(words) + 1)), str(rng.choice(pool)))
        users = ANGRY_USERS if (label == 1 and rng.random() < 0.6) else CALM_USERS
        per_thread[i % n_threads].append(
            Comment(
                id=f"d{i}",
                thread_id=f"demo{i % n_threads}",
                user=str(rng.choice(users)),
                text=" ".join(words),
                label=int(label),
            )
        )
    threads = tuple(
        Thread(thread_id=f"demo{t}", news_title=TITLES[t], comments=tuple(per_thread[t]))
        for t in range(n_threads)
    )
    return Corpus(threads=threads)


def write_lexicons(out_dir: str) -> None:
    with open(os.path.join(out_dir, "category_lexicon.txt"), "w", encoding="utf-8") as fh:
        fh.write("#categories 125\n")
        for word in HATE_MARKERS:
            fh.write(f"{word}\t7,31\n")
        for word in CALM_MARKERS:
            fh.write(f"{word}\t11,20\n")
        fh.write("policy\t88\npeople\t77\n")
    with open(os.path.join(out_dir, "emotion_lexicon.txt"), "w", encoding="utf-8") as fh:
        for word in HATE_MARKERS:
            for emotion in EMOTIONS:
                flag = 1 if emotion in ("anger", "disgust", "negative") else 0
                fh.write(f"{word}\t{emotion}\t{flag}\n")
        for word in CALM_MARKERS:
            for emotion in EMOTIONS:
                flag = 1 if emotion in ("trust", "positive") else 0
                fh.write(f"{word}\t{emotion}\t{flag}\n")


def write_embeddings(corpus: Corpus, out_dir: str, dim: int, seed: int) -> None:
    rng = np.random.default_rng(seed + 1)
    words = set()
    for comment in corpus.comments:
        words.update(comment.text.lower().split())
        words.update(corpus.thread_of(comment.id).news_title.lower().split())
    table = EmbeddingTable(
        dim=dim, word_map={w: rng.uniform(-0.5, 0.5, dim) for w in sorted(words)}
    )
    save_embeddings(table, os.path.join(out_dir, "embeddings.txt"))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="demo")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--comments", type=int, default=150)
    parser.add_argument("--embedding-dim", type=int, default=12)
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    corpus = build_corpus(args.comments, args.seed)
    save_corpus(corpus, os.path.join(args.out_dir, "corpus.json"))
    write_lexicons(args.out_dir)
    write_embeddings(corpus, args.out_dir, args.embedding_dim, args.seed)
    n_pos = sum(c.label for c in corpus.comments)
    print(
        f"wrote {args.out_dir}/: corpus.json ({len(corpus.comments)} comments, "
        f"{n_pos} hateful), lexicons, embeddings.txt (dim {args.embedding_dim})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
