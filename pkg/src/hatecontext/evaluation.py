"""Metrics, ROC AUC, cross-validation orchestration, and report emission.

Cross-validation rebuilds the vocabulary, class weights, and (for the
neural family) the character vocabulary from each fold's training split, so
no information leaks from test folds. Test-split scores are pooled across
folds and metrics are computed once on the pooled predictions.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

import numpy as np

from . import encoder as enc
from . import logreg as lr
from .corpus import Corpus, FoldAssignment, resolve_context
from .ensemble import avg_ensemble, max_ensemble
from .features import (
    CATEGORY_LEX,
    CHAR_NGRAM,
    EMOTION_LEX,
    WORD_NGRAM,
    FeatureConfig,
    Lexicons,
    build_vocabulary,
    featurize,
    tokenize,
)

DEFAULT_THRESHOLD = 0.5


class FoldError(RuntimeError):
    """Raised when training fails on a cross-validation fold."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class PRF1:
    precision: float
    recall: float
    f1: float
    degenerate: bool = False


@dataclass(frozen=True)
class MetricsReport:
    config: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    degenerate: bool = False


@dataclass(frozen=True)
class OverlapBreakdown:
    """How the two model families partition the gold-hateful comments."""

    both: int
    only_lr: int
    only_nn: int
    neither: int

    @property
    def total(self) -> int:
        return self.both + self.only_lr + self.only_nn + self.neither


def confusion(preds: Sequence[int], gold: Sequence[int]) -> ConfusionMatrix:
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} preds vs {len(gold)} gold")
    tp = fp = tn = fn = 0
    for p, g in zip(preds, gold):
        if g == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        else:
            if p == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n == 0:
        raise ValueError("empty confusion matrix")
    return (cm.tp + cm.tn) / cm.n


def prf1(cm: ConfusionMatrix) -> PRF1:
    """Precision/recall/F1 for the positive class; zero-denominator cases
    yield 0.0 and set the degenerate flag."""
    degenerate = False
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision, degenerate = 0.0, True
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return PRF1(precision=precision, recall=recall, f1=f1, degenerate=degenerate)


def roc_auc(scores: Sequence[float], gold: Sequence[int]) -> float:
    """Probability that a random positive outranks a random negative, ties
    counted half. Computed from average ranks; agrees exactly with the
    O(n^2) pairwise count because tied ranks are half-integers.
    """
    if len(scores) != len(gold):
        raise ValueError(f"length mismatch: {len(scores)} scores vs {len(gold)} gold")
    gold_arr = np.asarray(gold)
    score_arr = np.asarray(scores, dtype=np.float64)
    n_pos = int((gold_arr == 1).sum())
    n_neg = int((gold_arr == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    order = np.argsort(score_arr, kind="mergesort")
    ranks = np.empty(len(score_arr))
    sorted_scores = score_arr[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # 1-based average rank of the tie group [i, j]
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[gold_arr == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_report(
    label: str,
    scores: Sequence[float],
    gold: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
) -> MetricsReport:
    preds = [1 if s >= threshold else 0 for s in scores]
    cm = confusion(preds, gold)
    metrics = prf1(cm)
    return MetricsReport(
        config=label,
        accuracy=accuracy(cm),
        precision=metrics.precision,
        recall=metrics.recall,
        f1=metrics.f1,
        auc=roc_auc(scores, gold),
        degenerate=metrics.degenerate,
    )


def prediction_overlap(
    lr_preds: Sequence[int], nn_preds: Sequence[int], gold: Sequence[int]
) -> OverlapBreakdown:
    """Four-way breakdown of gold-hateful comments by which family flagged
    them."""
    if not (len(lr_preds) == len(nn_preds) == len(gold)):
        raise ValueError(
            f"misaligned lists: {len(lr_preds)}, {len(nn_preds)}, {len(gold)}"
        )
    both = only_lr = only_nn = neither = 0
    for p_lr, p_nn, g in zip(lr_preds, nn_preds, gold):
        if g != 1:
            continue
        if p_lr and p_nn:
            both += 1
        elif p_lr:
            only_lr += 1
        elif p_nn:
            only_nn += 1
        else:
            neither += 1
    return OverlapBreakdown(both=both, only_lr=only_lr, only_nn=only_nn, neither=neither)


@dataclass(frozen=True)
class ModelSpec:
    """Identifies a model family plus its feature or branch configuration."""

    label: str
    family: str  # "logreg" | "encoder"
    feature_config: FeatureConfig | None = None
    encoder_config: enc.EncoderConfig | None = None
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 5000

    def __post_init__(self) -> None:
        if self.family not in ("logreg", "encoder"):
            raise ValueError(f"unknown model family {self.family!r}")
        if self.family == "logreg" and self.feature_config is None:
            raise ValueError("logreg spec needs a feature configuration")
        if self.family == "encoder" and self.encoder_config is None:
            raise ValueError("encoder spec needs an encoder configuration")


@dataclass(frozen=True)
class Resources:
    """External inputs shared by all folds."""

    lexicons: Lexicons = field(default_factory=Lexicons)
    embeddings: enc.EmbeddingTable | None = None


@dataclass(frozen=True)
class CVResult:
    report: MetricsReport
    scores: dict  # comment_id -> pooled test-split score
    preds: dict  # comment_id -> thresholded label


def make_instance(comment, corpus: Corpus) -> enc.EncoderInstance:
    context = resolve_context(comment, corpus)
    return enc.EncoderInstance(
        comment_tokens=tuple(tokenize(comment.text)),
        title_tokens=tuple(tokenize(context.news_title)),
        username=comment.user,
        label=comment.label,
    )


def _texts_by_source(comments, corpus: Corpus) -> dict:
    return {
        "comment": [c.text for c in comments],
        "title": [resolve_context(c, corpus).news_title for c in comments],
        "username": [c.user for c in comments],
    }


def _fold_scores_logreg(
    corpus: Corpus,
    folds: FoldAssignment,
    fold: int,
    spec: ModelSpec,
    resources: Resources,
) -> dict:
    train_comments = [c for c in corpus.comments if folds.assignment[c.id] != fold]
    test_comments = [c for c in corpus.comments if folds.assignment[c.id] == fold]
    config = spec.feature_config
    vocab = build_vocabulary(
        _texts_by_source(train_comments, corpus),
        config,
        category_lexicon=resources.lexicons.category,
        emotion_lexicon=resources.lexicons.emotion,
    )

    def vectors(comments):
        return [
            featurize(
                c.text,
                resolve_context(c, corpus).news_title,
                c.user,
                vocab,
                resources.lexicons,
                config,
            )
            for c in comments
        ]

    model = lr.train_logreg(
        vectors(train_comments),
        [c.label for c in train_comments],
        C=spec.C,
        tol=spec.tol,
        max_iter=spec.max_iter,
    )
    probs = lr.predict_proba_many(model, vectors(test_comments))
    return {c.id: float(p) for c, p in zip(test_comments, probs)}


def _fold_scores_encoder(
    corpus: Corpus,
    folds: FoldAssignment,
    fold: int,
    spec: ModelSpec,
    resources: Resources,
    seed: int,
) -> dict:
    if resources.embeddings is None:
        raise ValueError("encoder cross-validation needs an embedding table")
    train_comments = [c for c in corpus.comments if folds.assignment[c.id] != fold]
    test_comments = [c for c in corpus.comments if folds.assignment[c.id] == fold]
    char_vocab = enc.CharVocab.build([c.user for c in train_comments])
    model = enc.ContextNetModel.build(
        spec.encoder_config, resources.embeddings, char_vocab, seed=[seed, fold, 0]
    )
    enc.train(
        model,
        [make_instance(c, corpus) for c in train_comments],
        seed=[seed, fold, 1],
    )
    out = {}
    for c in test_comments:
        inst = make_instance(c, corpus)
        out[c.id] = model.forward(
            comment_tokens=inst.comment_tokens,
            title_tokens=inst.title_tokens,
            username=inst.username,
            mode="eval",
        )
    return out


def _fold_worker(args) -> tuple:
    corpus, folds, fold, spec, resources, seed = args
    try:
        if spec.family == "logreg":
            return fold, _fold_scores_logreg(corpus, folds, fold, spec, resources)
        return fold, _fold_scores_encoder(corpus, folds, fold, spec, resources, seed)
    except Exception as exc:
        raise FoldError(f"training failed on fold {fold}: {exc}") from exc


def cross_validate(
    corpus: Corpus,
    folds: FoldAssignment,
    spec: ModelSpec,
    resources: Resources | None = None,
    seed: int = 0,
    jobs: int = 1,
    threshold: float = DEFAULT_THRESHOLD,
) -> CVResult:
    """Train on each fold's complement, score its test split, pool scores,
    and compute metrics once on the pooled predictions.

    Deterministic given the seed; folds may be trained in parallel
    (``jobs > 1``) without changing the result.
    """
    resources = resources if resources is not None else Resources()
    tasks = [(corpus, folds, fold, spec, resources, seed) for fold in range(folds.k)]
    scores: dict = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fold_worker, tasks))
    else:
        results = [_fold_worker(task) for task in tasks]
    for _, fold_scores in sorted(results, key=lambda item: item[0]):
        scores.update(fold_scores)

    ordered = [scores[c.id] for c in corpus.comments]
    gold = [c.label for c in corpus.comments]
    report = compute_report(spec.label, ordered, gold, threshold=threshold)
    preds = {
        c.id: (1 if scores[c.id] >= threshold else 0) for c in corpus.comments
    }
    return CVResult(report=report, scores={c.id: scores[c.id] for c in corpus.comments}, preds=preds)


def evaluate_ensembles(
    lr_scores: Mapping[str, float],
    nn_scores: Mapping[str, float],
    corpus: Corpus,
    threshold: float = DEFAULT_THRESHOLD,
    lr_label: str = "logreg",
    nn_label: str = "neural",
) -> tuple:
    """Reports for both components and both combination rules, plus the
    gold-hateful overlap breakdown.

    Verifies the max-rule set identity on every run: its positive set must
    equal the union of the component positive sets.
    """
    ids = [c.id for c in corpus.comments]
    for name, mapping in ((lr_label, lr_scores), (nn_label, nn_scores)):
        missing = [i for i in ids if i not in mapping]
        if missing:
            raise ValueError(f"{name} scores missing comment ids, e.g. {missing[0]!r}")
    gold = [c.label for c in corpus.comments]
    s_lr = [lr_scores[i] for i in ids]
    s_nn = [nn_scores[i] for i in ids]
    s_max = [max_ensemble(a, b) for a, b in zip(s_lr, s_nn)]
    s_avg = [avg_ensemble(a, b) for a, b in zip(s_lr, s_nn)]

    p_lr = [1 if s >= threshold else 0 for s in s_lr]
    p_nn = [1 if s >= threshold else 0 for s in s_nn]
    p_max = [1 if s >= threshold else 0 for s in s_max]
    union = [1 if (a or b) else 0 for a, b in zip(p_lr, p_nn)]
    if p_max != union:
        raise RuntimeError(
            "max-ensemble positive set differs from the union of component positives"
        )

    reports = [
        compute_report(lr_label, s_lr, gold, threshold),
        compute_report(nn_label, s_nn, gold, threshold),
        compute_report("max_ensemble", s_max, gold, threshold),
        compute_report("avg_ensemble", s_avg, gold, threshold),
    ]
    max_recall = reports[2].recall
    if max_recall < max(reports[0].recall, reports[1].recall):
        raise RuntimeError("max-ensemble recall fell below a component recall")
    overlap = prediction_overlap(p_lr, p_nn, gold)
    return reports, overlap


def _format3(value: float) -> str:
    """Three decimals, ties rounded half away from zero."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def emit_report(reports: Sequence[MetricsReport], fmt: str = "text") -> str:
    """Render metric rows as an aligned text table or CSV."""
    header = ("config", "accuracy", "precision", "recall", "f1", "auc")
    rows = [
        (
            r.config,
            _format3(r.accuracy),
            _format3(r.precision),
            _format3(r.recall),
            _format3(r.f1),
            _format3(r.auc),
        )
        for r in reports
    ]
    if fmt == "csv":
        lines = [",".join(header)]
        lines.extend(",".join(row) for row in rows)
        return "\n".join(lines) + "\n"
    if fmt == "text":
        widths = [
            max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
            for i in range(len(header))
        ]
        def line(parts):
            return "  ".join(p.ljust(widths[i]) for i, p in enumerate(parts)).rstrip()
        lines = [line(header)]
        lines.extend(line(row) for row in rows)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def lr_suite(
    C: float = 1.0, tol: float = 1e-6, max_iter: int = 5000
) -> list:
    """The standard feature-model rows: comment-only feature ablations,
    then the full feature set with added context sources."""
    all_groups = frozenset({CHAR_NGRAM, WORD_NGRAM, CATEGORY_LEX, EMOTION_LEX})
    rows = [
        ("char|comment", frozenset({CHAR_NGRAM}), frozenset({"comment"})),
        ("char+word|comment", frozenset({CHAR_NGRAM, WORD_NGRAM}), frozenset({"comment"})),
        (
            "char+liwc+nrc|comment",
            frozenset({CHAR_NGRAM, CATEGORY_LEX, EMOTION_LEX}),
            frozenset({"comment"}),
        ),
        ("char+word+liwc+nrc|comment", all_groups, frozenset({"comment"})),
        (
            "char+word+liwc+nrc|comment+username",
            all_groups,
            frozenset({"comment", "username"}),
        ),
        (
            "char+word+liwc+nrc|comment+title",
            all_groups,
            frozenset({"comment", "title"}),
        ),
        (
            "char+word+liwc+nrc|comment+title+username",
            all_groups,
            frozenset({"comment", "title", "username"}),
        ),
    ]
    return [
        ModelSpec(
            label=label,
            family="logreg",
            feature_config=FeatureConfig(groups=groups, sources=sources),
            C=C,
            tol=tol,
            max_iter=max_iter,
        )
        for label, groups, sources in rows
    ]


def nn_suite(hidden: int = 100, **overrides) -> list:
    """The standard neural rows: comment-only encoder variants, then the
    attention model with added context branches."""
    return [
        ModelSpec(label=label, family="encoder", encoder_config=config)
        for label, config in enc.variant_configs(hidden=hidden, **overrides).items()
    ]
