"""Shared fixtures: the small static corpus plus synthetic corpus builders."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hatecontext.corpus import Comment, Corpus, Thread, load_corpus

DATA_DIR = Path(__file__).parent / "data"

_FILLERS = ("alpha", "beta", "gamma", "delta", "topic", "reply", "note", "words")


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture_corpus_path() -> str:
    return str(DATA_DIR / "fixture_corpus.json")


@pytest.fixture
def fixture_corpus(fixture_corpus_path) -> Corpus:
    return load_corpus(fixture_corpus_path)


def synthetic_corpus(
    n_comments: int,
    n_pos: int,
    n_threads: int = 2,
    seed: int = 0,
    marker_pos: str = "grexly",
    marker_neg: str = "blimworth",
) -> Corpus:
    """Deterministic corpus whose classes are separated by a marker token,
    so simple n-gram models can classify it almost perfectly."""
    rng = np.random.default_rng(seed)
    labels = np.array([1] * n_pos + [0] * (n_comments - n_pos))
    rng.shuffle(labels)
    per_thread = [[] for _ in range(n_threads)]
    for i, label in enumerate(labels):
        marker = marker_pos if label == 1 else marker_neg
        filler_a = _FILLERS[int(rng.integers(len(_FILLERS)))]
        filler_b = _FILLERS[int(rng.integers(len(_FILLERS)))]
        comment = Comment(
            id=f"s{i}",
            thread_id=f"st{i % n_threads}",
            user=f"user{i % 17}",
            text=f"{filler_a} {marker} {filler_b} comment number {i}",
            label=int(label),
        )
        per_thread[i % n_threads].append(comment)
    threads = tuple(
        Thread(
            thread_id=f"st{t}",
            news_title=f"daily discussion thread number {t}",
            comments=tuple(per_thread[t]),
        )
        for t in range(n_threads)
    )
    return Corpus(threads=threads)
