"""Sparse text features: char/word n-grams plus category and emotion lexicons.

Each comment is featurized together with its context (news title, username).
Features are namespaced by (source, group) so the columns of distinct blocks
never overlap. N-gram features get one column per observed training gram;
lexicon features occupy fixed dedicated column blocks per source, after all
n-gram columns.

Lexicon file formats:
  category lexicon: header line ``#categories N`` then ``word<TAB>c1,c2,...``
    with 0-based category indices;
  emotion lexicon: ``word<TAB>emotion<TAB>0|1`` triples, emotions drawn from
    EMOTIONS below; only flag=1 rows set bits.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

CHAR_NGRAM = "char_ngram"
WORD_NGRAM = "word_ngram"
CATEGORY_LEX = "category_lex"
EMOTION_LEX = "emotion_lex"
GROUPS = (CHAR_NGRAM, WORD_NGRAM, CATEGORY_LEX, EMOTION_LEX)

SOURCES = ("comment", "title", "username")

EMOTIONS = (
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "sadness",
    "surprise",
    "trust",
    "negative",
    "positive",
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]+")


class LexiconError(ValueError):
    """Raised when a lexicon file is malformed."""


class FeatureConfigError(ValueError):
    """Raised when a feature configuration is invalid or mismatched."""


@dataclass(frozen=True)
class FeatureConfig:
    """Which feature groups to extract, and from which text sources."""

    groups: frozenset
    sources: frozenset
    char_orders: tuple = (2, 3, 4)
    word_orders: tuple = (1, 2)

    def __post_init__(self) -> None:
        if not self.groups:
            raise FeatureConfigError("at least one feature group must be enabled")
        if not self.sources:
            raise FeatureConfigError("at least one source must be enabled")
        unknown = set(self.groups) - set(GROUPS)
        if unknown:
            raise FeatureConfigError(f"unknown feature groups: {sorted(unknown)}")
        unknown = set(self.sources) - set(SOURCES)
        if unknown:
            raise FeatureConfigError(f"unknown sources: {sorted(unknown)}")

    @staticmethod
    def of(groups: Iterable[str], sources: Iterable[str], **kwargs) -> "FeatureConfig":
        return FeatureConfig(frozenset(groups), frozenset(sources), **kwargs)


@dataclass(frozen=True)
class CategoryLexicon:
    n_categories: int
    word_map: dict

    def categories(self, word: str) -> frozenset:
        return self.word_map.get(word, frozenset())


@dataclass(frozen=True)
class EmotionLexicon:
    word_map: dict

    def vector(self, word: str) -> np.ndarray | None:
        return self.word_map.get(word)


@dataclass(frozen=True)
class Lexicons:
    category: CategoryLexicon | None = None
    emotion: EmotionLexicon | None = None


@dataclass(frozen=True)
class Vocabulary:
    """Column layout for one feature configuration.

    ``entries`` maps namespaced n-gram keys (``source|char|gram`` or
    ``source|word|gram``) to column indices; ``blocks`` maps
    (source, lexicon group) to (start, width) column ranges.
    """

    entries: dict
    blocks: dict
    n_columns: int
    config: FeatureConfig


@dataclass(frozen=True)
class FeatureVector:
    """Sparse column -> value map over a vocabulary of given width."""

    pairs: dict
    width: int


def tokenize(text: str) -> list:
    """Lowercase and split: word characters group, each maximal punctuation
    run becomes its own token, whitespace separates."""
    return _TOKEN_RE.findall(text.lower())


def char_ngrams(text: str, orders: Iterable[int]) -> Counter:
    """Multiset of contiguous character n-grams of the lowercased text.

    No boundary padding; strings shorter than an order contribute nothing
    for that order.
    """
    lowered = text.lower()
    grams: Counter = Counter()
    for order in orders:
        if order < 1:
            raise ValueError(f"n-gram order must be positive, got {order}")
        for i in range(len(lowered) - order + 1):
            grams[lowered[i : i + order]] += 1
    return grams


def word_ngrams(tokens: Sequence[str], orders: Iterable[int]) -> Counter:
    """Multiset of contiguous token n-grams, joined by a single space."""
    grams: Counter = Counter()
    for order in orders:
        if order < 1:
            raise ValueError(f"n-gram order must be positive, got {order}")
        for i in range(len(tokens) - order + 1):
            grams[" ".join(tokens[i : i + order])] += 1
    return grams


def _source_tokens(source: str, text: str) -> list:
    # A username counts as one token; comments and titles are tokenized.
    if source == "username":
        return [text.lower()] if text else []
    return tokenize(text)


def _source_grams(source: str, text: str, group: str, config: FeatureConfig) -> Counter:
    if group == CHAR_NGRAM:
        return char_ngrams(text, config.char_orders)
    if group == WORD_NGRAM:
        return word_ngrams(_source_tokens(source, text), config.word_orders)
    raise ValueError(f"not an n-gram group: {group}")


def _ngram_key(source: str, group: str, gram: str) -> str:
    short = "char" if group == CHAR_NGRAM else "word"
    return f"{source}|{short}|{gram}"


def build_vocabulary(
    train_texts_by_source: Mapping[str, Sequence[str]],
    config: FeatureConfig,
    category_lexicon: CategoryLexicon | None = None,
    emotion_lexicon: EmotionLexicon | None = None,
) -> Vocabulary:
    """Build the column layout from training texts only.

    N-gram columns come first in sorted key order, then the fixed lexicon
    blocks per enabled source (comment, title, username order). Grams not
    seen in training simply have no column and are dropped at featurize
    time.
    """
    for source in config.sources:
        if source not in train_texts_by_source:
            raise FeatureConfigError(f"missing training texts for source {source!r}")
    if CATEGORY_LEX in config.groups and category_lexicon is None:
        raise FeatureConfigError("category_lex enabled but no category lexicon given")
    if EMOTION_LEX in config.groups and emotion_lexicon is None:
        raise FeatureConfigError("emotion_lex enabled but no emotion lexicon given")

    keys = set()
    for source in sorted(config.sources):
        for group in (CHAR_NGRAM, WORD_NGRAM):
            if group not in config.groups:
                continue
            for text in train_texts_by_source[source]:
                for gram in _source_grams(source, text, group, config):
                    keys.add(_ngram_key(source, group, gram))
    entries = {key: i for i, key in enumerate(sorted(keys))}

    blocks = {}
    offset = len(entries)
    for source in SOURCES:
        if source not in config.sources:
            continue
        if CATEGORY_LEX in config.groups:
            blocks[(source, CATEGORY_LEX)] = (offset, category_lexicon.n_categories)
            offset += category_lexicon.n_categories
        if EMOTION_LEX in config.groups:
            blocks[(source, EMOTION_LEX)] = (offset, len(EMOTIONS))
            offset += len(EMOTIONS)
    return Vocabulary(entries=entries, blocks=blocks, n_columns=offset, config=config)


def category_vector(tokens: Sequence[str], lex: CategoryLexicon) -> np.ndarray:
    """Sum of the tokens' category indicator vectors."""
    out = np.zeros(lex.n_categories)
    for token in tokens:
        for idx in lex.categories(token):
            out[idx] += 1.0
    return out


def emotion_vector(tokens: Sequence[str], lex: EmotionLexicon) -> np.ndarray:
    """Sum of the tokens' 10-dim emotion vectors."""
    out = np.zeros(len(EMOTIONS))
    for token in tokens:
        vec = lex.vector(token)
        if vec is not None:
            out += vec
    return out


def featurize(
    comment_text: str,
    title: str,
    username: str,
    vocab: Vocabulary,
    lexicons: Lexicons,
    config: FeatureConfig,
) -> FeatureVector:
    """Sparse feature vector for one comment plus its context.

    Pure function of its inputs. Only columns present in the vocabulary are
    emitted; grams unseen at vocabulary-build time are dropped.
    """
    if vocab.config != config:
        raise FeatureConfigError(
            "feature configuration does not match the one the vocabulary was built with"
        )
    if CATEGORY_LEX in config.groups and lexicons.category is None:
        raise FeatureConfigError("category_lex enabled but no category lexicon given")
    if EMOTION_LEX in config.groups and lexicons.emotion is None:
        raise FeatureConfigError("emotion_lex enabled but no emotion lexicon given")

    texts = {"comment": comment_text, "title": title, "username": username}
    pairs: dict = {}
    for source in config.sources:
        text = texts[source]
        for group in (CHAR_NGRAM, WORD_NGRAM):
            if group not in config.groups:
                continue
            for gram, count in _source_grams(source, text, group, config).items():
                col = vocab.entries.get(_ngram_key(source, group, gram))
                if col is not None:
                    pairs[col] = pairs.get(col, 0.0) + float(count)
        if CATEGORY_LEX in config.groups:
            start, _ = vocab.blocks[(source, CATEGORY_LEX)]
            vec = category_vector(_source_tokens(source, text), lexicons.category)
            for idx in np.nonzero(vec)[0]:
                pairs[start + int(idx)] = float(vec[idx])
        if EMOTION_LEX in config.groups:
            start, _ = vocab.blocks[(source, EMOTION_LEX)]
            vec = emotion_vector(_source_tokens(source, text), lexicons.emotion)
            for idx in np.nonzero(vec)[0]:
                pairs[start + int(idx)] = float(vec[idx])
    return FeatureVector(pairs=pairs, width=vocab.n_columns)


def load_category_lexicon(path: str) -> CategoryLexicon:
    """Parse the ``#categories N`` header format; indices are 0-based."""
    word_map: dict = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        match = re.fullmatch(r"#categories\s+(\d+)", header)
        if not match:
            raise LexiconError(
                f"{path}:1: expected '#categories N' header, got {header!r}"
            )
        n_categories = int(match.group(1))
        if n_categories < 1:
            raise LexiconError(f"{path}:1: category count must be positive")
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(
                    f"{path}:{lineno}: expected 'word<TAB>c1,c2,...', got {line!r}"
                )
            word, spec = parts
            try:
                indices = frozenset(int(s) for s in spec.split(","))
            except ValueError as exc:
                raise LexiconError(
                    f"{path}:{lineno}: bad category list {spec!r}"
                ) from exc
            for idx in indices:
                if not 0 <= idx < n_categories:
                    raise LexiconError(
                        f"{path}:{lineno}: category index {idx} out of range "
                        f"[0, {n_categories})"
                    )
            key = word.lower()
            word_map[key] = word_map.get(key, frozenset()) | indices
    return CategoryLexicon(n_categories=n_categories, word_map=word_map)


def load_emotion_lexicon(path: str) -> EmotionLexicon:
    """Parse word/emotion/flag triples; only flag=1 rows set bits."""
    emotion_index = {name: i for i, name in enumerate(EMOTIONS)}
    word_map: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconError(
                    f"{path}:{lineno}: expected 'word<TAB>emotion<TAB>0|1', got {line!r}"
                )
            word, emotion, flag = parts
            if emotion not in emotion_index:
                raise LexiconError(f"{path}:{lineno}: unknown emotion {emotion!r}")
            if flag not in ("0", "1"):
                raise LexiconError(f"{path}:{lineno}: flag must be 0 or 1, got {flag!r}")
            key = word.lower()
            if key not in word_map:
                word_map[key] = np.zeros(len(EMOTIONS))
            if flag == "1":
                word_map[key][emotion_index[emotion]] = 1.0
    return EmotionLexicon(word_map=word_map)
