#!/usr/bin/env python3
"""One-shot adapter: released Fox News comments dump -> canonical corpus JSON.

The public release (github.com/sjtuprog/fox-news-comments) ships the
annotated comments as JSON lines. This adapter accepts one JSON object per
line with either layout:

  {"title": ..., "text": "username: comment text", "label": 0|1}
  {"title": ..., "user": ..., "text": ..., "label": 0|1}

When the username is embedded in ``text`` it is split off at the first
": ". Lines are grouped into threads by title, in order of first
appearance; thread and comment ids are generated. The flat dump carries no
reply structure, so parent_id is null throughout.

Usage: python3 scripts/convert_released_corpus.py INPUT.json OUTPUT.json
"""

import argparse
import json
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hatecontext.corpus import Comment, Corpus, Thread, corpus_stats, save_corpus


def parse_line(raw: dict, lineno: int):
    for key in ("title", "text", "label"):
        if key not in raw:
            raise ValueError(f"line {lineno}: missing field {key!r}")
    label = int(raw["label"])
    if label not in (0, 1):
        raise ValueError(f"line {lineno}: label must be 0 or 1, got {raw['label']!r}")
    text = raw["text"]
    if "user" in raw:
        user = raw["user"]
    elif ": " in text:
        user, text = text.split(": ", 1)
    else:
        user, text = "", text
    return raw["title"], user.strip(), text, label


def convert(in_path: str, out_path: str) -> Corpus:
    titles_in_order = []
    grouped = {}
    with open(in_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: not valid JSON: {exc.msg}") from exc
            title, user, text, label = parse_line(raw, lineno)
            if title not in grouped:
                grouped[title] = []
                titles_in_order.append(title)
            grouped[title].append((user, text, label))

    threads = []
    comment_counter = 0
    for t, title in enumerate(titles_in_order):
        comments = []
        for user, text, label in grouped[title]:
            comments.append(
                Comment(
                    id=f"c{comment_counter}",
                    thread_id=f"t{t}",
                    user=user,
                    text=text,
                    label=label,
                )
            )
            comment_counter += 1
        threads.append(
            Thread(thread_id=f"t{t}", news_title=title, comments=tuple(comments))
        )
    corpus = Corpus(threads=tuple(threads))
    save_corpus(corpus, out_path)
    return corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", help="released JSON-lines file")
    parser.add_argument("output", help="canonical corpus JSON to write")
    args = parser.parse_args()
    corpus = convert(args.input, args.output)
    stats = corpus_stats(corpus)
    print(
        f"wrote {args.output}: {stats.n_comments} comments "
        f"({stats.n_hateful} hateful) in {stats.n_threads} threads, "
        f"{stats.n_users} users"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
