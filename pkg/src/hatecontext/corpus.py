"""Threaded news-comment corpus: loading, validation, stats, folds, agreement.

The canonical corpus file is UTF-8 JSON, a top-level array of threads:

    [{"thread_id": str, "news_title": str, "article_text": str|null,
      "comments": [{"id": str, "user": str, "text": str,
                    "parent_id": str|null, "label": 0|1}]}]

Corpus objects are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

HATEFUL = 1
NON_HATEFUL = 0

# Comments longer than this many whitespace-separated words count as "long"
# in corpus statistics.
LONG_COMMENT_WORDS = 50


class CorpusError(ValueError):
    """Raised when a corpus file violates the canonical schema."""


class StratificationError(ValueError):
    """Raised when a stratified fold assignment is impossible."""


@dataclass(frozen=True)
class Comment:
    id: str
    thread_id: str
    user: str
    text: str
    label: int
    parent_id: str | None = None


@dataclass(frozen=True)
class Thread:
    thread_id: str
    news_title: str
    comments: tuple[Comment, ...]
    article_text: str | None = None


@dataclass(frozen=True)
class Corpus:
    threads: tuple[Thread, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)
    _thread_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        _validate_threads(self.threads)
        by_id: dict[str, Comment] = {}
        thread_of: dict[str, Thread] = {}
        for thread in self.threads:
            for comment in thread.comments:
                by_id[comment.id] = comment
                thread_of[comment.id] = thread
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_thread_of", thread_of)

    @property
    def comments(self) -> tuple[Comment, ...]:
        """All comments in corpus order (thread order, then position)."""
        return tuple(c for t in self.threads for c in t.comments)

    def comment(self, comment_id: str) -> Comment:
        return self._by_id[comment_id]

    def thread_of(self, comment_id: str) -> Thread:
        return self._thread_of[comment_id]

    def __contains__(self, comment_id: str) -> bool:
        return comment_id in self._by_id


@dataclass(frozen=True)
class FoldAssignment:
    """Maps every comment id to a fold index in [0, k)."""

    k: int
    assignment: dict

    def test_ids(self, fold: int) -> list[str]:
        return [cid for cid, f in self.assignment.items() if f == fold]

    def train_ids(self, fold: int) -> list[str]:
        return [cid for cid, f in self.assignment.items() if f != fold]


@dataclass(frozen=True)
class CorpusStats:
    n_comments: int
    n_hateful: int
    n_threads: int
    n_users: int
    n_long_comments: int


@dataclass(frozen=True)
class CommentContext:
    news_title: str
    username: str


def _validate_threads(threads: tuple[Thread, ...]) -> None:
    if not threads:
        raise CorpusError("corpus must contain at least one thread")
    seen_threads: set[str] = set()
    seen_comments: set[str] = set()
    for thread in threads:
        if thread.thread_id in seen_threads:
            raise CorpusError(f"duplicate thread id {thread.thread_id!r}")
        seen_threads.add(thread.thread_id)
        if not thread.news_title:
            raise CorpusError(f"thread {thread.thread_id!r}: news_title is empty")
        local_ids = set()
        for comment in thread.comments:
            if not comment.id:
                raise CorpusError(f"thread {thread.thread_id!r}: comment id is empty")
            if comment.id in seen_comments:
                raise CorpusError(f"duplicate comment id {comment.id!r}")
            seen_comments.add(comment.id)
            local_ids.add(comment.id)
            if comment.thread_id != thread.thread_id:
                raise CorpusError(
                    f"comment {comment.id!r}: thread_id {comment.thread_id!r} does "
                    f"not match enclosing thread {thread.thread_id!r}"
                )
            if comment.label not in (0, 1):
                raise CorpusError(
                    f"comment {comment.id!r}: label must be 0 or 1, got {comment.label!r}"
                )
        parent_of = {}
        for comment in thread.comments:
            if comment.parent_id is None:
                continue
            if comment.parent_id not in local_ids:
                raise CorpusError(
                    f"comment {comment.id!r}: parent_id {comment.parent_id!r} not "
                    f"found in thread {thread.thread_id!r}"
                )
            parent_of[comment.id] = comment.parent_id
        # Parent links must form a forest: walking up from any comment
        # terminates without revisiting a node.
        for start in parent_of:
            seen_chain = {start}
            node = parent_of.get(start)
            while node is not None:
                if node in seen_chain:
                    raise CorpusError(
                        f"comment {start!r}: parent links form a cycle in "
                        f"thread {thread.thread_id!r}"
                    )
                seen_chain.add(node)
                node = parent_of.get(node)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CorpusError(message)


def _parse_comment(raw: object, thread_id: str) -> Comment:
    _require(isinstance(raw, dict), f"thread {thread_id!r}: comment entry is not an object")
    assert isinstance(raw, dict)
    for key in ("id", "user", "text", "label"):
        _require(key in raw, f"thread {thread_id!r}: comment missing field {key!r}")
    _require(isinstance(raw["id"], str), f"thread {thread_id!r}: comment id must be a string")
    _require(isinstance(raw["user"], str), f"comment {raw['id']!r}: user must be a string")
    _require(isinstance(raw["text"], str), f"comment {raw['id']!r}: text must be a string")
    label = raw["label"]
    _require(
        isinstance(label, int) and not isinstance(label, bool) and label in (0, 1),
        f"comment {raw['id']!r}: label must be 0 or 1, got {label!r}",
    )
    parent_id = raw.get("parent_id")
    _require(
        parent_id is None or isinstance(parent_id, str),
        f"comment {raw['id']!r}: parent_id must be a string or null",
    )
    return Comment(
        id=raw["id"],
        thread_id=thread_id,
        user=raw["user"],
        text=raw["text"],
        label=label,
        parent_id=parent_id,
    )


def _parse_thread(raw: object) -> Thread:
    _require(isinstance(raw, dict), "thread entry is not an object")
    assert isinstance(raw, dict)
    for key in ("thread_id", "news_title", "comments"):
        _require(key in raw, f"thread missing field {key!r}")
    _require(isinstance(raw["thread_id"], str), "thread_id must be a string")
    thread_id = raw["thread_id"]
    _require(isinstance(raw["news_title"], str), f"thread {thread_id!r}: news_title must be a string")
    article_text = raw.get("article_text")
    _require(
        article_text is None or isinstance(article_text, str),
        f"thread {thread_id!r}: article_text must be a string or null",
    )
    _require(isinstance(raw["comments"], list), f"thread {thread_id!r}: comments must be an array")
    comments = tuple(_parse_comment(c, thread_id) for c in raw["comments"])
    return Thread(
        thread_id=thread_id,
        news_title=raw["news_title"],
        comments=comments,
        article_text=article_text,
    )


def load_corpus(path: str) -> Corpus:
    """Load and validate a canonical corpus file.

    Raises CorpusError on malformed JSON (with line/column), schema
    violations, duplicate ids, dangling parent links, or bad labels.
    """
    with open(path, encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise CorpusError(
                f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    _require(isinstance(raw, list), f"{path}: top level must be an array of threads")
    threads = tuple(_parse_thread(t) for t in raw)
    return Corpus(threads=threads)


def serialize_corpus(corpus: Corpus) -> str:
    """Canonical JSON text for a corpus; load_corpus inverts it exactly."""
    payload = [
        {
            "thread_id": t.thread_id,
            "news_title": t.news_title,
            "article_text": t.article_text,
            "comments": [
                {
                    "id": c.id,
                    "user": c.user,
                    "text": c.text,
                    "parent_id": c.parent_id,
                    "label": c.label,
                }
                for c in t.comments
            ],
        }
        for t in corpus.threads
    ]
    return json.dumps(payload, ensure_ascii=False, indent=1)


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_corpus(corpus))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    comments = corpus.comments
    return CorpusStats(
        n_comments=len(comments),
        n_hateful=sum(c.label for c in comments),
        n_threads=len(corpus.threads),
        n_users=len({c.user for c in comments}),
        n_long_comments=sum(
            1 for c in comments if len(c.text.split()) > LONG_COMMENT_WORDS
        ),
    )


def make_folds(corpus: Corpus, k: int, seed: int) -> FoldAssignment:
    """Deterministic stratified folds.

    Within each class, ids are shuffled by a seeded RNG and dealt to folds
    so fold sizes differ by at most one and per-fold positive counts differ
    by at most one. Extra negatives start at the fold after the last fold
    that received an extra positive, which keeps total sizes balanced.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    comments = corpus.comments
    pos_ids = [c.id for c in comments if c.label == 1]
    neg_ids = [c.id for c in comments if c.label == 0]
    if len(pos_ids) < k:
        raise StratificationError(
            f"too few positive examples to stratify: {len(pos_ids)} < k={k}"
        )
    if len(neg_ids) < k:
        raise StratificationError(
            f"too few negative examples to stratify: {len(neg_ids)} < k={k}"
        )
    rng = random.Random(seed)
    rng.shuffle(pos_ids)
    rng.shuffle(neg_ids)

    base_pos, rem_pos = divmod(len(pos_ids), k)
    base_neg, rem_neg = divmod(len(neg_ids), k)
    extra_neg_folds = {(rem_pos + i) % k for i in range(rem_neg)}

    fold_of: dict[str, int] = {}
    cursor = 0
    for fold in range(k):
        count = base_pos + (1 if fold < rem_pos else 0)
        for cid in pos_ids[cursor : cursor + count]:
            fold_of[cid] = fold
        cursor += count
    cursor = 0
    for fold in range(k):
        count = base_neg + (1 if fold in extra_neg_folds else 0)
        for cid in neg_ids[cursor : cursor + count]:
            fold_of[cid] = fold
        cursor += count

    # Emit the assignment in corpus order so iteration is reproducible.
    assignment = {c.id: fold_of[c.id] for c in comments}
    return FoldAssignment(k=k, assignment=assignment)


def cohen_kappa(labels_a: list, labels_b: list) -> float:
    """Chance-corrected agreement between two binary annotations.

    Uses marginal-product chance agreement. Computed from integer counts so
    the degenerate case (chance agreement exactly 1) is detected exactly; it
    only occurs when both annotators are constant and identical, and then
    the result is 1.0.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(
            f"label lists differ in length: {len(labels_a)} != {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise ValueError("label lists are empty")
    for value in list(labels_a) + list(labels_b):
        if value not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {value!r}")
    agree = sum(1 for a, b in zip(labels_a, labels_b) if a == b)
    a1 = sum(labels_a)
    b1 = sum(labels_b)
    chance_num = a1 * b1 + (n - a1) * (n - b1)  # n^2 * p_e
    denom = n * n - chance_num
    if denom == 0:
        return 1.0
    return (agree * n - chance_num) / denom


def resolve_context(comment: Comment, corpus: Corpus) -> CommentContext:
    """Return the enclosing thread's title and the comment's username."""
    if comment.id not in corpus:
        raise KeyError(f"unknown comment id {comment.id!r}")
    thread = corpus.thread_of(comment.id)
    return CommentContext(news_title=thread.news_title, username=comment.user)
