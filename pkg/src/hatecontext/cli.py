"""Command-line entry point: stats, train, evaluate, ensemble, kappa, report.

Settings can come from a flat key=value config file (``--config``); explicit
flags override file values, which override built-in defaults. Every command
is deterministic given its inputs and seed, and each run writes a manifest
that reproduces it. Exit codes: 0 success, 2 configuration error, 3 runtime
or training error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import encoder as enc
from . import evaluation as ev
from . import logreg as lr
from .corpus import cohen_kappa, corpus_stats, load_corpus, make_folds
from .features import (
    CATEGORY_LEX,
    CHAR_NGRAM,
    EMOTION_LEX,
    WORD_NGRAM,
    FeatureConfig,
    Lexicons,
    build_vocabulary,
    featurize,
    load_category_lexicon,
    load_emotion_lexicon,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

FEATURE_ALIASES = {
    "char": CHAR_NGRAM,
    "word": WORD_NGRAM,
    "liwc": CATEGORY_LEX,
    "nrc": EMOTION_LEX,
    "category": CATEGORY_LEX,
    "emotion": EMOTION_LEX,
}


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


# name -> (type, default); config-file keys and flag names match.
_SETTINGS = {
    "corpus": (str, None),
    "category_lexicon": (str, None),
    "emotion_lexicon": (str, None),
    "embeddings": (str, None),
    "embedding_dim": (int, 300),
    "model": (str, "lr"),
    "features": (str, "char"),
    "sources": (str, "comment"),
    "branches": (str, "comment"),
    "comment_encoder": (str, "bilstm_attention"),
    "suite": (str, None),
    "folds": (int, 10),
    "seed": (int, 0),
    "jobs": (int, 1),
    "out": (str, "out"),
    "c_reg": (float, 1.0),
    "tol": (float, 1e-6),
    "max_iter": (int, 5000),
    "hidden": (int, 100),
    "attention_width": (int, None),
    "epochs": (int, 30),
    "batch_size": (int, 128),
    "learning_rate": (float, 1e-3),
    "dropout": (float, 0.2),
    "threshold": (float, 0.5),
}


def _parse_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _SETTINGS:
                raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
            values[key] = raw.strip()
    return values


def _coerce(key: str, raw) -> object:
    kind, _ = _SETTINGS[key]
    if raw is None or isinstance(raw, kind):
        return raw
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"setting {key!r}: cannot parse {raw!r} as {kind.__name__}") from exc


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file values, and explicit flags, in that
    order of increasing precedence."""
    settings = {key: default for key, (_, default) in _SETTINGS.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        for key, raw in _parse_config_file(config_path).items():
            settings[key] = _coerce(key, raw)
    for key in _SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = _coerce(key, value)
    return settings


def _require_path(settings: dict, key: str, purpose: str) -> str:
    value = settings.get(key)
    if not value:
        raise ConfigError(f"--{key.replace('_', '-')} is required {purpose}")
    if not os.path.exists(value):
        raise ConfigError(f"{key} file not found: {value}")
    return value


def _split_list(raw: str) -> list:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _feature_groups(raw: str) -> frozenset:
    groups = set()
    for name in _split_list(raw):
        if name not in FEATURE_ALIASES:
            raise ConfigError(f"unknown feature group {name!r}")
        groups.add(FEATURE_ALIASES[name])
    if not groups:
        raise ConfigError("at least one feature group is required")
    return frozenset(groups)


def _load_lexicons(settings: dict, groups: frozenset) -> Lexicons:
    category = emotion = None
    if CATEGORY_LEX in groups:
        category = load_category_lexicon(
            _require_path(settings, "category_lexicon", "for liwc features")
        )
    if EMOTION_LEX in groups:
        emotion = load_emotion_lexicon(
            _require_path(settings, "emotion_lexicon", "for nrc features")
        )
    return Lexicons(category=category, emotion=emotion)


def _load_embeddings(settings: dict) -> enc.EmbeddingTable:
    path = _require_path(settings, "embeddings", "for the neural model")
    return enc.load_embeddings(path, settings["embedding_dim"])


def _encoder_config(settings: dict, branches: tuple) -> enc.EncoderConfig:
    return enc.EncoderConfig(
        hidden=settings["hidden"],
        attention_width=settings["attention_width"],
        comment_encoder=settings["comment_encoder"],
        branches=branches,
        recurrent_dropout=settings["dropout"],
        batch_size=settings["batch_size"],
        epochs=settings["epochs"],
        learning_rate=settings["learning_rate"],
    )


def _manifest(settings: dict, command: str) -> str:
    payload = {"command": command, "settings": settings}
    canon = json.dumps(payload, sort_keys=True)
    digest = hashlib.sha256(canon.encode("utf-8")).hexdigest()
    return json.dumps({**payload, "sha256": digest}, sort_keys=True, indent=1) + "\n"


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _write_scores(path: str, scores: dict) -> None:
    lines = ["comment_id,score"]
    lines.extend(f"{cid},{score:.17g}" for cid, score in scores.items())
    _write(path, "\n".join(lines) + "\n")


def _read_scores(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"scores file not found: {path}")
    scores: dict = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != "comment_id,score":
            raise ValueError(f"{path}: expected 'comment_id,score' header")
        for lineno, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            cid, _, raw = line.rpartition(",")
            if not cid:
                raise ValueError(f"{path}:{lineno}: expected 'comment_id,score'")
            scores[cid] = float(raw)
    return scores


def _safe_label(label: str) -> str:
    return label.replace("|", "_").replace("/", "_")


def cmd_stats(settings: dict) -> int:
    corpus = load_corpus(_require_path(settings, "corpus", "to compute statistics"))
    stats = corpus_stats(corpus)
    print(f"comments: {stats.n_comments}")
    print(f"hateful: {stats.n_hateful}")
    print(f"threads: {stats.n_threads}")
    print(f"users: {stats.n_users}")
    print(f"long comments (>50 words): {stats.n_long_comments}")
    return EXIT_OK


def cmd_kappa(file_a: str, file_b: str) -> int:
    def read_labels(path: str) -> list:
        if not os.path.exists(path):
            raise ConfigError(f"label file not found: {path}")
        with open(path, encoding="utf-8") as handle:
            return [int(line.strip()) for line in handle if line.strip()]

    value = cohen_kappa(read_labels(file_a), read_labels(file_b))
    print(f"kappa: {value}")
    return EXIT_OK


def cmd_train(settings: dict) -> int:
    corpus = load_corpus(_require_path(settings, "corpus", "to train"))
    out = settings["out"]
    os.makedirs(out, exist_ok=True)
    if settings["model"] == "lr":
        groups = _feature_groups(settings["features"])
        sources = frozenset(_split_list(settings["sources"]))
        config = FeatureConfig(groups=groups, sources=sources)
        lexicons = _load_lexicons(settings, groups)
        comments = corpus.comments
        vocab = build_vocabulary(
            ev._texts_by_source(comments, corpus),
            config,
            category_lexicon=lexicons.category,
            emotion_lexicon=lexicons.emotion,
        )
        X = [
            featurize(
                c.text,
                corpus.thread_of(c.id).news_title,
                c.user,
                vocab,
                lexicons,
                config,
            )
            for c in comments
        ]
        model = lr.train_logreg(
            X,
            [c.label for c in comments],
            C=settings["c_reg"],
            tol=settings["tol"],
            max_iter=settings["max_iter"],
            seed=settings["seed"],
        )
        lr.save_logreg(model, os.path.join(out, "model.json"))
        _write(
            os.path.join(out, "vocabulary.json"),
            json.dumps(
                {
                    "entries": vocab.entries,
                    "blocks": {f"{s}|{g}": list(span) for (s, g), span in vocab.blocks.items()},
                    "n_columns": vocab.n_columns,
                    "groups": sorted(config.groups),
                    "sources": sorted(config.sources),
                },
                sort_keys=True,
            )
            + "\n",
        )
        if not model.converged:
            print("warning: solver did not reach tolerance", file=sys.stderr)
    elif settings["model"] == "nn":
        embeddings = _load_embeddings(settings)
        branches = tuple(_split_list(settings["branches"]))
        config = _encoder_config(settings, branches)
        char_vocab = enc.CharVocab.build([c.user for c in corpus.comments])
        model = enc.ContextNetModel.build(
            config, embeddings, char_vocab, seed=settings["seed"]
        )
        instances = [ev.make_instance(c, corpus) for c in corpus.comments]
        _, trace = enc.train(model, instances, seed=settings["seed"])
        enc.save_model(model, os.path.join(out, "model.json"))
        trace_lines = ["epoch,loss"]
        trace_lines.extend(f"{i},{loss:.17g}" for i, loss in enumerate(trace))
        _write(os.path.join(out, "loss_trace.csv"), "\n".join(trace_lines) + "\n")
    else:
        raise ConfigError(f"unknown model family {settings['model']!r} (use lr or nn)")
    _write(os.path.join(out, "manifest.json"), _manifest(settings, "train"))
    return EXIT_OK


def _suite_specs(settings: dict) -> list:
    suite = settings["suite"]
    if suite == "lr":
        return ev.lr_suite(
            C=settings["c_reg"], tol=settings["tol"], max_iter=settings["max_iter"]
        )
    if suite == "nn":
        return ev.nn_suite(
            hidden=settings["hidden"],
            recurrent_dropout=settings["dropout"],
            batch_size=settings["batch_size"],
            epochs=settings["epochs"],
            learning_rate=settings["learning_rate"],
        )
    raise ConfigError(f"unknown suite {suite!r} (use lr, nn, or ensemble)")


def _single_spec(settings: dict) -> ev.ModelSpec:
    if settings["model"] == "lr":
        groups = _feature_groups(settings["features"])
        sources = frozenset(_split_list(settings["sources"]))
        label = "+".join(_split_list(settings["features"]))
        label += "|" + "+".join(_split_list(settings["sources"]))
        return ev.ModelSpec(
            label=label,
            family="logreg",
            feature_config=FeatureConfig(groups=groups, sources=sources),
            C=settings["c_reg"],
            tol=settings["tol"],
            max_iter=settings["max_iter"],
        )
    if settings["model"] == "nn":
        branches = tuple(_split_list(settings["branches"]))
        label = f"{settings['comment_encoder']}|" + "+".join(branches)
        return ev.ModelSpec(
            label=label,
            family="encoder",
            encoder_config=_encoder_config(settings, branches),
        )
    raise ConfigError(f"unknown model family {settings['model']!r} (use lr or nn)")


def _resources_for(specs: list, settings: dict) -> ev.Resources:
    groups: set = set()
    needs_embeddings = False
    for spec in specs:
        if spec.family == "logreg":
            groups |= set(spec.feature_config.groups)
        else:
            needs_embeddings = True
    lexicons = _load_lexicons(settings, frozenset(groups))
    embeddings = _load_embeddings(settings) if needs_embeddings else None
    return ev.Resources(lexicons=lexicons, embeddings=embeddings)


def cmd_evaluate(settings: dict) -> int:
    corpus = load_corpus(_require_path(settings, "corpus", "to evaluate"))
    folds = make_folds(corpus, settings["folds"], settings["seed"])
    out = settings["out"]
    os.makedirs(out, exist_ok=True)

    if settings["suite"] == "ensemble":
        lr_spec = ev.lr_suite(
            C=settings["c_reg"], tol=settings["tol"], max_iter=settings["max_iter"]
        )[-1]
        nn_spec = ev.nn_suite(
            hidden=settings["hidden"],
            recurrent_dropout=settings["dropout"],
            batch_size=settings["batch_size"],
            epochs=settings["epochs"],
            learning_rate=settings["learning_rate"],
        )[-2]  # attention encoder with title context
        resources = _resources_for([lr_spec, nn_spec], settings)
        lr_result = ev.cross_validate(
            corpus, folds, lr_spec, resources, seed=settings["seed"], jobs=settings["jobs"]
        )
        nn_result = ev.cross_validate(
            corpus, folds, nn_spec, resources, seed=settings["seed"], jobs=settings["jobs"]
        )
        _write_scores(os.path.join(out, "scores_lr.csv"), lr_result.scores)
        _write_scores(os.path.join(out, "scores_nn.csv"), nn_result.scores)
        reports, overlap = ev.evaluate_ensembles(
            lr_result.scores,
            nn_result.scores,
            corpus,
            threshold=settings["threshold"],
            lr_label=lr_spec.label,
            nn_label=nn_spec.label,
        )
        _emit_ensemble_outputs(out, reports, overlap)
        _write(os.path.join(out, "manifest.json"), _manifest(settings, "evaluate"))
        return EXIT_OK

    specs = _suite_specs(settings) if settings["suite"] else [_single_spec(settings)]
    resources = _resources_for(specs, settings)
    reports = []
    for spec in specs:
        result = ev.cross_validate(
            corpus, folds, spec, resources, seed=settings["seed"], jobs=settings["jobs"]
        )
        reports.append(result.report)
        _write_scores(
            os.path.join(out, f"scores_{_safe_label(spec.label)}.csv"), result.scores
        )
    csv_text = ev.emit_report(reports, "csv")
    table = ev.emit_report(reports, "text")
    _write(os.path.join(out, "metrics.csv"), csv_text)
    _write(os.path.join(out, "metrics.txt"), table)
    _write(os.path.join(out, "manifest.json"), _manifest(settings, "evaluate"))
    print(table, end="")
    return EXIT_OK


def _emit_ensemble_outputs(out: str, reports, overlap) -> None:
    csv_text = ev.emit_report(reports, "csv")
    table = ev.emit_report(reports, "text")
    _write(os.path.join(out, "ensemble_metrics.csv"), csv_text)
    _write(os.path.join(out, "ensemble_metrics.txt"), table)
    overlap_csv = (
        "both,only_lr,only_nn,neither\n"
        f"{overlap.both},{overlap.only_lr},{overlap.only_nn},{overlap.neither}\n"
    )
    _write(os.path.join(out, "overlap.csv"), overlap_csv)
    print(table, end="")
    print(
        "gold-hateful overlap: "
        f"both={overlap.both} only_lr={overlap.only_lr} "
        f"only_nn={overlap.only_nn} neither={overlap.neither}"
    )


def cmd_ensemble(settings: dict, lr_scores_path: str, nn_scores_path: str) -> int:
    corpus = load_corpus(_require_path(settings, "corpus", "to evaluate ensembles"))
    lr_scores = _read_scores(lr_scores_path)
    nn_scores = _read_scores(nn_scores_path)
    reports, overlap = ev.evaluate_ensembles(
        lr_scores, nn_scores, corpus, threshold=settings["threshold"]
    )
    out = settings["out"]
    os.makedirs(out, exist_ok=True)
    _emit_ensemble_outputs(out, reports, overlap)
    _write(os.path.join(out, "manifest.json"), _manifest(settings, "ensemble"))
    return EXIT_OK


def cmd_report(metrics_path: str, fmt: str) -> int:
    if not os.path.exists(metrics_path):
        raise ConfigError(f"metrics file not found: {metrics_path}")
    reports = []
    with open(metrics_path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != "config,accuracy,precision,recall,f1,auc":
            raise ValueError(f"{metrics_path}: unexpected header {header!r}")
        for line in handle:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            label = ",".join(parts[:-5])
            acc, prec, rec, f1, auc = (float(v) for v in parts[-5:])
            reports.append(
                ev.MetricsReport(
                    config=label, accuracy=acc, precision=prec, recall=rec, f1=f1, auc=auc
                )
            )
    print(ev.emit_report(reports, fmt), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatecontext",
        description="Context-aware hate speech classification over threaded news comments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value settings file")
        p.add_argument("--corpus", help="canonical corpus JSON file")
        p.add_argument("--category-lexicon", dest="category_lexicon")
        p.add_argument("--emotion-lexicon", dest="emotion_lexicon")
        p.add_argument("--embeddings", help="pretrained word vectors (text format)")
        p.add_argument("--embedding-dim", dest="embedding_dim", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, help="parallel fold workers")
        p.add_argument("--folds", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--model", choices=["lr", "nn"])
        p.add_argument("--features", help="comma list: char,word,liwc,nrc")
        p.add_argument("--sources", help="comma list: comment,title,username")
        p.add_argument("--branches", help="comma list: comment,title,username")
        p.add_argument(
            "--comment-encoder",
            dest="comment_encoder",
            choices=["lstm", "bilstm", "bilstm_attention"],
        )
        p.add_argument("--c-reg", dest="c_reg", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--hidden", type=int)
        p.add_argument("--attention-width", dest="attention_width", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--dropout", type=float)

    p_stats = sub.add_parser("stats", help="print corpus statistics")
    add_common(p_stats)

    p_train = sub.add_parser("train", help="train one model on the full corpus")
    add_common(p_train)

    p_eval = sub.add_parser("evaluate", help="cross-validated evaluation")
    add_common(p_eval)
    p_eval.add_argument("--suite", choices=["lr", "nn", "ensemble"])

    p_ens = sub.add_parser("ensemble", help="combine two score files")
    add_common(p_ens)
    p_ens.add_argument("--lr-scores", dest="lr_scores", required=True)
    p_ens.add_argument("--nn-scores", dest="nn_scores", required=True)

    p_kappa = sub.add_parser("kappa", help="inter-annotator agreement of two label files")
    p_kappa.add_argument("file_a")
    p_kappa.add_argument("file_b")

    p_report = sub.add_parser("report", help="render a metrics CSV as a table")
    p_report.add_argument("--metrics", required=True)
    p_report.add_argument("--format", default="text", choices=["text", "csv"])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "kappa":
            return cmd_kappa(args.file_a, args.file_b)
        if args.command == "report":
            return cmd_report(args.metrics, args.format)
        settings = resolve_settings(args)
        if args.command == "stats":
            return cmd_stats(settings)
        if args.command == "train":
            return cmd_train(settings)
        if args.command == "evaluate":
            return cmd_evaluate(settings)
        if args.command == "ensemble":
            return cmd_ensemble(settings, args.lr_scores, args.nn_scores)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
