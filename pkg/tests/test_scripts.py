"""The runnable scripts: demo data generator and corpus adapter."""

import importlib.util
import json
import sys
from pathlib import Path

import pytest

from hatecontext.corpus import load_corpus

SCRIPTS = Path(__file__).parent.parent / "scripts"


def load_script(name: str):
    spec = importlib.util.spec_from_file_location(name, SCRIPTS / f"{name}.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


class TestConvertReleasedCorpus:
    def test_groups_by_title_and_splits_usernames(self, tmp_path):
        adapter = load_script("convert_released_corpus")
        source = tmp_path / "released.json"
        lines = [
            {"title": "Story A", "text": "alice: first comment", "label": 0},
            {"title": "Story A", "text": "bob: second one", "label": 1},
            {"title": "Story B", "user": "cara", "text": "presplit", "label": 0},
        ]
        source.write_text(
            "\n".join(json.dumps(line) for line in lines) + "\n", encoding="utf-8"
        )
        out = tmp_path / "canonical.json"
        adapter.convert(str(source), str(out))
        corpus = load_corpus(str(out))
        assert len(corpus.threads) == 2
        first = corpus.threads[0]
        assert first.news_title == "Story A"
        assert [c.user for c in first.comments] == ["alice", "bob"]
        assert [c.text for c in first.comments] == ["first comment", "second one"]
        assert corpus.threads[1].comments[0].user == "cara"

    def test_bad_label_reports_line(self, tmp_path):
        adapter = load_script("convert_released_corpus")
        source = tmp_path / "released.json"
        source.write_text(
            '{"title": "T", "text": "u: x", "label": 3}\n', encoding="utf-8"
        )
        with pytest.raises(ValueError, match="line 1"):
            adapter.convert(str(source), str(tmp_path / "out.json"))


class TestMakeDemoData:
    def test_outputs_are_loadable_and_consistent(self, tmp_path, monkeypatch):
        demo = load_script("make_demo_data")
        out = tmp_path / "demo"
        monkeypatch.setattr(
            sys, "argv", ["make_demo_data.py", str(out), "--comments", "40"]
        )
        assert demo.main() == 0
        corpus = load_corpus(str(out / "corpus.json"))
        assert len(corpus.comments) == 40
        assert 0 < sum(c.label for c in corpus.comments) < 40
        from hatecontext.features import load_category_lexicon, load_emotion_lexicon
        from hatecontext.encoder import load_embeddings

        assert load_category_lexicon(str(out / "category_lexicon.txt")).n_categories == 125
        lex = load_emotion_lexicon(str(out / "emotion_lexicon.txt"))
        assert len(lex.word_map) == 8
        table = load_embeddings(str(out / "embeddings.txt"), 12)
        corpus_words = {
            w for c in corpus.comments for w in c.text.lower().split()
        }
        assert corpus_words <= set(table.word_map)
