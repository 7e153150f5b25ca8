"""End-to-end CLI behavior: commands, outputs, determinism, exit codes."""

import json
import os

import numpy as np
import pytest

from hatecontext.cli import main
from hatecontext.corpus import save_corpus
from hatecontext.encoder import EmbeddingTable, save_embeddings
from conftest import DATA_DIR, synthetic_corpus

FIXTURE_CORPUS = str(DATA_DIR / "fixture_corpus.json")
CATEGORY_LEX = str(DATA_DIR / "category_lexicon.txt")
EMOTION_LEX = str(DATA_DIR / "emotion_lexicon.txt")


@pytest.fixture
def tiny_corpus_path(tmp_path):
    corpus = synthetic_corpus(24, 10, seed=1)
    path = str(tmp_path / "tiny_corpus.json")
    save_corpus(corpus, path)
    return path


@pytest.fixture
def tiny_embeddings_path(tmp_path):
    corpus = synthetic_corpus(24, 10, seed=1)
    words = set()
    for c in corpus.comments:
        words.update(c.text.lower().split())
        words.update(corpus.thread_of(c.id).news_title.lower().split())
    rng = np.random.default_rng(2)
    table = EmbeddingTable(dim=3, word_map={w: rng.uniform(-1, 1, 3) for w in sorted(words)})
    path = str(tmp_path / "vectors.txt")
    save_embeddings(table, path)
    return path


class TestStats:
    def test_prints_fixture_counts(self, capsys):
        assert main(["stats", "--corpus", FIXTURE_CORPUS]) == 0
        out = capsys.readouterr().out
        assert "comments: 10" in out
        assert "hateful: 6" in out
        assert "threads: 2" in out
        assert "users: 10" in out

    def test_missing_file_is_config_error(self, capsys):
        assert main(["stats", "--corpus", "/does/not/exist.json"]) == 2
        assert "not found" in capsys.readouterr().err


class TestKappa:
    def test_identical_files(self, tmp_path, capsys):
        path = tmp_path / "labels.txt"
        path.write_text("1\n0\n1\n0\n", encoding="utf-8")
        assert main(["kappa", str(path), str(path)]) == 0
        assert "kappa: 1.0" in capsys.readouterr().out

    def test_reference_pair(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("1\n1\n0\n0\n", encoding="utf-8")
        b.write_text("1\n0\n0\n0\n", encoding="utf-8")
        assert main(["kappa", str(a), str(b)]) == 0
        assert "kappa: 0.5" in capsys.readouterr().out

    def test_length_mismatch_fails(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("1\n0\n", encoding="utf-8")
        b.write_text("1\n", encoding="utf-8")
        assert main(["kappa", str(a), str(b)]) == 3
        assert "length" in capsys.readouterr().err


class TestTrain:
    def test_lr_model_loadable_and_reproducible(self, tmp_path, tiny_corpus_path):
        from hatecontext.logreg import load_logreg

        out_a = str(tmp_path / "run_a")
        out_b = str(tmp_path / "run_b")
        args = [
            "train", "--corpus", tiny_corpus_path, "--model", "lr",
            "--features", "char", "--sources", "comment",
            "--max-iter", "50", "--seed", "3",
        ]
        assert main(args + ["--out", out_a]) == 0
        assert main(args + ["--out", out_b]) == 0
        model = load_logreg(os.path.join(out_a, "model.json"))
        assert model.width > 0
        bytes_a = open(os.path.join(out_a, "model.json"), "rb").read()
        bytes_b = open(os.path.join(out_b, "model.json"), "rb").read()
        assert bytes_a == bytes_b
        assert os.path.exists(os.path.join(out_a, "vocabulary.json"))
        assert os.path.exists(os.path.join(out_a, "manifest.json"))

    def test_nn_writes_default_thirty_entry_loss_trace(
        self, tmp_path, tiny_corpus_path, tiny_embeddings_path
    ):
        out = str(tmp_path / "nn_run")
        assert (
            main(
                [
                    "train", "--corpus", tiny_corpus_path, "--model", "nn",
                    "--embeddings", tiny_embeddings_path, "--embedding-dim", "3",
                    "--branches", "comment", "--hidden", "2",
                    "--batch-size", "24", "--seed", "0", "--out", out,
                ]
            )
            == 0
        )
        trace_lines = open(os.path.join(out, "loss_trace.csv")).read().strip().splitlines()
        assert trace_lines[0] == "epoch,loss"
        assert len(trace_lines) == 31  # header + one row per default epoch
        from hatecontext.encoder import load_embeddings, load_model

        table = load_embeddings(tiny_embeddings_path, 3)
        model = load_model(os.path.join(out, "model.json"), table)
        assert model.config.epochs == 30

    def test_unknown_feature_is_config_error(self, tiny_corpus_path, tmp_path, capsys):
        code = main(
            [
                "train", "--corpus", tiny_corpus_path, "--model", "lr",
                "--features", "sparkle", "--out", str(tmp_path / "x"),
            ]
        )
        assert code == 2
        assert "sparkle" in capsys.readouterr().err


class TestEvaluate:
    def test_single_config_outputs_and_determinism(self, tmp_path, tiny_corpus_path):
        out_a = str(tmp_path / "eval_a")
        out_b = str(tmp_path / "eval_b")
        args = [
            "evaluate", "--corpus", tiny_corpus_path, "--model", "lr",
            "--features", "char", "--sources", "comment", "--folds", "2",
            "--max-iter", "60", "--seed", "5",
        ]
        assert main(args + ["--out", out_a]) == 0
        assert main(args + ["--out", out_b]) == 0
        csv_a = open(os.path.join(out_a, "metrics.csv"), "rb").read()
        csv_b = open(os.path.join(out_b, "metrics.csv"), "rb").read()
        assert csv_a == csv_b
        assert csv_a.decode().startswith("config,accuracy,precision,recall,f1,auc")
        scores = [
            f for f in os.listdir(out_a) if f.startswith("scores_") and f.endswith(".csv")
        ]
        assert len(scores) == 1

    def test_lr_suite_runs_all_rows(self, tmp_path, tiny_corpus_path):
        out = str(tmp_path / "suite")
        assert (
            main(
                [
                    "evaluate", "--corpus", tiny_corpus_path, "--suite", "lr",
                    "--category-lexicon", CATEGORY_LEX,
                    "--emotion-lexicon", EMOTION_LEX,
                    "--folds", "2", "--max-iter", "40", "--out", out,
                ]
            )
            == 0
        )
        lines = open(os.path.join(out, "metrics.csv")).read().strip().splitlines()
        assert len(lines) == 8  # header + 7 configuration rows

    def test_nn_suite_runs_all_rows(
        self, tmp_path, tiny_corpus_path, tiny_embeddings_path
    ):
        out = str(tmp_path / "nn_suite")
        assert (
            main(
                [
                    "evaluate", "--corpus", tiny_corpus_path, "--suite", "nn",
                    "--embeddings", tiny_embeddings_path, "--embedding-dim", "3",
                    "--hidden", "2", "--epochs", "1", "--batch-size", "12",
                    "--folds", "2", "--out", out,
                ]
            )
            == 0
        )
        lines = open(os.path.join(out, "metrics.csv")).read().strip().splitlines()
        assert len(lines) == 7  # header + 6 variants

    def test_parallel_jobs_match_sequential(self, tmp_path, tiny_corpus_path):
        out_seq = str(tmp_path / "seq")
        out_par = str(tmp_path / "par")
        args = [
            "evaluate", "--corpus", tiny_corpus_path, "--model", "lr",
            "--features", "char", "--folds", "2", "--max-iter", "40",
        ]
        assert main(args + ["--out", out_seq, "--jobs", "1"]) == 0
        assert main(args + ["--out", out_par, "--jobs", "2"]) == 0
        assert open(os.path.join(out_seq, "metrics.csv"), "rb").read() == open(
            os.path.join(out_par, "metrics.csv"), "rb"
        ).read()


class TestGoldenFiles:
    def test_evaluate_fixture_matches_golden_csv(self, tmp_path):
        out = str(tmp_path / "golden_eval")
        assert (
            main(
                [
                    "evaluate", "--corpus", FIXTURE_CORPUS, "--model", "lr",
                    "--features", "char", "--sources", "comment",
                    "--folds", "2", "--seed", "5", "--max-iter", "60",
                    "--out", out,
                ]
            )
            == 0
        )
        produced = open(os.path.join(out, "metrics.csv"), "rb").read()
        golden = open(str(DATA_DIR / "golden_eval_metrics.csv"), "rb").read()
        assert produced == golden

    def test_ensemble_fixture_matches_golden_files(self, tmp_path):
        out = str(tmp_path / "golden_ens")
        assert (
            main(
                [
                    "ensemble", "--corpus", FIXTURE_CORPUS,
                    "--lr-scores", str(DATA_DIR / "fixture_lr_scores.csv"),
                    "--nn-scores", str(DATA_DIR / "fixture_nn_scores.csv"),
                    "--out", out,
                ]
            )
            == 0
        )
        for name, golden_name in (
            ("ensemble_metrics.csv", "golden_ensemble_metrics.csv"),
            ("overlap.csv", "golden_overlap.csv"),
        ):
            produced = open(os.path.join(out, name), "rb").read()
            golden = open(str(DATA_DIR / golden_name), "rb").read()
            assert produced == golden
        # overlap counts enumerated by hand from the fixture score files
        overlap = open(os.path.join(out, "overlap.csv")).read().strip().splitlines()[1]
        assert overlap == "2,2,1,1"


class TestEnsembleCommand:
    def test_combines_two_score_files(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        from hatecontext.corpus import load_corpus

        corpus = load_corpus(FIXTURE_CORPUS)
        lr_path = tmp_path / "lr.csv"
        nn_path = tmp_path / "nn.csv"
        for path, seed in ((lr_path, 1), (nn_path, 2)):
            rows = ["comment_id,score"]
            r = np.random.default_rng(seed)
            rows.extend(f"{c.id},{r.uniform(0, 1):.17g}" for c in corpus.comments)
            path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out = str(tmp_path / "ens")
        assert (
            main(
                [
                    "ensemble", "--corpus", FIXTURE_CORPUS,
                    "--lr-scores", str(lr_path), "--nn-scores", str(nn_path),
                    "--out", out,
                ]
            )
            == 0
        )
        printed = capsys.readouterr().out
        assert "max_ensemble" in printed
        assert "avg_ensemble" in printed
        overlap = open(os.path.join(out, "overlap.csv")).read().strip().splitlines()
        assert overlap[0] == "both,only_lr,only_nn,neither"
        counts = [int(v) for v in overlap[1].split(",")]
        assert sum(counts) == 6  # fixture gold-hateful comments


class TestReportCommand:
    def test_renders_metrics_csv(self, capsys, data_dir):
        assert (
            main(["report", "--metrics", str(data_dir / "golden_report.csv")]) == 0
        )
        out = capsys.readouterr().out
        golden = (data_dir / "golden_report.txt").read_text(encoding="utf-8")
        assert out == golden


class TestConfigFilePrecedence:
    def test_flags_beat_file_beats_defaults(self, tmp_path, tiny_corpus_path):
        config_path = tmp_path / "run.cfg"
        config_path.write_text(
            f"corpus = {tiny_corpus_path}\nseed = 11\nfolds = 2\nmax_iter = 40\n"
            "features = char\nmodel = lr\n",
            encoding="utf-8",
        )
        out = str(tmp_path / "cfg_run")
        assert (
            main(["evaluate", "--config", str(config_path), "--seed", "22", "--out", out])
            == 0
        )
        manifest = json.load(open(os.path.join(out, "manifest.json")))
        assert manifest["settings"]["seed"] == 22  # flag wins
        assert manifest["settings"]["folds"] == 2  # file beats default
        assert manifest["settings"]["max_iter"] == 40

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        config_path = tmp_path / "bad.cfg"
        config_path.write_text("mystery = 5\n", encoding="utf-8")
        assert main(["stats", "--config", str(config_path)]) == 2
        assert "mystery" in capsys.readouterr().err


class TestExitCodes:
    def test_corrupt_corpus_is_runtime_error(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("[{]", encoding="utf-8")
        assert main(["stats", "--corpus", str(path)]) == 3
        assert "parse error" in capsys.readouterr().err
