"""Deterministic fixture data for tests, selftest, and desk-scale runs.

The synthetic corpus mimics the structure the training losses rely on: every
sentence carries a topic word, a nesting-level marker, and position markers,
so neighbor prediction, level, position, and title heads all have signal to
learn. All tokens are alphabetic so section-prediction filters keep them.
"""

from __future__ import annotations

import json
import random

from .corpus import Document, Thread, parse_corpus, parse_threads
from .util import write_atomic

COMMON_WORDS = (
    "the", "a", "of", "and", "in", "it", "is", "was", "for", "with",
    "this", "that", "which", "also", "then", "quite",
)

TOPICS = 8
WORDS_PER_TOPIC = 240

# Word frequencies within a topic fall off zipf-style, like real text.
_ZIPF_WEIGHTS = [1.0 / (k + 1) for k in range(WORDS_PER_TOPIC)]


def _letters(i: int) -> str:
    """Stable alphabetic encoding of an index (avoids digits in tokens)."""
    if i < 0:
        raise ValueError("index must be >= 0")
    out = ""
    while True:
        out = chr(ord("a") + i % 26) + out
        i //= 26
        if i == 0:
            return out


def _topic_words(topic: int) -> list[str]:
    return [f"w{_letters(topic * WORDS_PER_TOPIC + k)}" for k in range(WORDS_PER_TOPIC)]


def _sentence(topic: int, level: int, sent_pos: int, para_pos: int, rng: random.Random) -> str:
    fillers = rng.choices(_topic_words(topic), weights=_ZIPF_WEIGHTS, k=2)
    return " ".join(
        [
            f"topic{_letters(topic)}",
            f"level{_letters(level - 1)}",
            f"spos{_letters(sent_pos)}",
            f"ppos{_letters(para_pos)}",
            fillers[0],
            fillers[1],
            rng.choice(COMMON_WORDS),
            ".",
        ]
    )


def _paragraph(topic: int, level: int, para_pos: int, n_sentences: int, rng: random.Random) -> list[str]:
    return [_sentence(topic, level, i, para_pos, rng) for i in range(n_sentences)]


def fixture_corpus_records(n_docs: int, seed: int = 13, sentences_per_para: int = 5) -> list[dict]:
    """Paper-shaped documents: Abstract, Introduction, two middle sections, Conclusion."""
    records = []
    for d in range(n_docs):
        rng = random.Random(f"fixture-doc:{seed}:{d}")
        topic = d % TOPICS
        tword = f"topic{_letters(topic)}"
        section_plan = [
            ("Abstract", 1, 2),
            ("Introduction", 1, 1),
            (f"{tword} methods", 2, 2),
            (f"results for {tword}", 3, 2),
            ("Conclusion", 1, 1),
        ]
        sections = []
        para_pos = 0
        for title, level, n_paras in section_plan:
            paragraphs = []
            for _ in range(n_paras):
                paragraphs.append(_paragraph(topic, level, para_pos, sentences_per_para, rng))
                para_pos += 1
            sections.append({"title": title, "level": level, "paragraphs": paragraphs})
        records.append(
            {
                "id": f"doc-{_letters(d)}",
                "title": f"study of {tword} {_letters(d)}",
                "categories": [
                    f"cat-{_letters(topic)}",
                    f"cat-{_letters((topic + 1) % TOPICS)}",
                    f"group-{_letters(topic % 5)}",
                ],
                "sections": sections,
            }
        )
    return records


def fixture_corpus_jsonl(n_docs: int, seed: int = 13, sentences_per_para: int = 5) -> str:
    records = fixture_corpus_records(n_docs, seed, sentences_per_para)
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def fixture_corpus(n_docs: int, seed: int = 13, sentences_per_para: int = 5) -> list[Document]:
    return parse_corpus(fixture_corpus_jsonl(n_docs, seed, sentences_per_para).splitlines())


def write_fixture_corpus(path, n_docs: int, seed: int = 13, sentences_per_para: int = 5) -> None:
    write_atomic(path, fixture_corpus_jsonl(n_docs, seed, sentences_per_para))


def fixture_threads_jsonl(n_threads: int, seed: int = 13) -> str:
    """Chat threads with a few system messages and too-short lines mixed in."""
    lines = []
    for t in range(n_threads):
        rng = random.Random(f"fixture-thread:{seed}:{t}")
        topic = t % TOPICS
        words = _topic_words(topic)
        users = [f"user{_letters((t + k) % 9)}" for k in range(3)]
        utterances = [f"*** {users[0]} has joined the channel"]
        n_real = rng.randint(9, 14)
        for i in range(n_real):
            user = rng.choice(users)
            utterances.append(
                f"{user} says {rng.choice(words)} about {rng.choice(words)} {rng.choice(COMMON_WORDS)}"
            )
            if rng.random() < 0.15:
                utterances.append("ok")  # too short: filtered
        lines.append(json.dumps({"thread_id": f"thread-{_letters(t)}", "utterances": utterances}))
    return "".join(line + "\n" for line in lines)


def fixture_threads(n_threads: int, seed: int = 13) -> list[Thread]:
    return parse_threads(fixture_threads_jsonl(n_threads, seed).splitlines())


def fixture_vectors_text(tokens, dim: int, seed: int = 13) -> str:
    """A plain-text word vector file covering the given tokens."""
    rng = random.Random(f"fixture-vectors:{seed}")
    lines = []
    for token in tokens:
        values = " ".join(f"{rng.uniform(-1, 1):.4f}" for _ in range(dim))
        lines.append(f"{token} {values}")
    return "".join(line + "\n" for line in lines)


# --- PDTB fixture -----------------------------------------------------------

_CONNECTIVES = {
    "Comparison.Contrast": "but",
    "Contingency.Cause": "because",
    "Expansion.Conjunction": "and",
}

# The worked explicit-relation example: the connective prefixes argument 2
# and must be stripped from it.
PDTB_EXAMPLE = {
    "section": 2,
    "type": "explicit",
    "arg1": "In any case, the brokerage firms are clearly moving faster to create new ads than they did in the fall of 1987.",
    "arg2": "But it remains to be seen whether their ads will be any more effective.",
    "connective": "But",
    "label": "Comparison.Contrast",
    "doc_id": "wsj-example",
}
PDTB_EXAMPLE_ARG2_STRIPPED = "it remains to be seen whether their ads will be any more effective."


def _pdtb_text(label: str, i: int, rel_type: str) -> tuple[str, str]:
    conn = _CONNECTIVES[label]
    arg1 = f"The {_letters(i)} committee reviewed the quarterly plan in detail."
    if rel_type == "explicit":
        arg2 = f"{conn.capitalize()} the board deferred the {_letters(i)} decision until spring."
    else:
        arg2 = f"The board deferred the {_letters(i)} decision until spring."
    return arg1, arg2


def fixture_pdtb_records() -> list[dict]:
    """Sixty records spanning WSJ sections 1-24.

    Explicit labels: Comparison.Contrast (10 train), Contingency.Cause
    (10 train), Expansion.Conjunction (9 train, so it gets filtered).
    Implicit labels: Contingency.Cause and Expansion.Conjunction (10 train
    each). Two records sit outside sections 2-23 and must be dropped.
    """
    records = [dict(PDTB_EXAMPLE)]
    plans = [
        # (rel_type, label, train sections, dev sections, test sections)
        ("explicit", "Comparison.Contrast", [3, 4, 5, 6, 7, 8, 9, 10, 11], [15], [19, 20]),
        ("explicit", "Contingency.Cause", [3, 4, 5, 6, 7, 8, 9, 10, 11, 12], [17], [21]),
        ("explicit", "Expansion.Conjunction", [2, 3, 4, 5, 6, 7, 8, 9, 10], [18], [22]),
        ("implicit", "Contingency.Cause", [2, 3, 4, 5, 6, 7, 8, 9, 10, 11], [16], [23]),
        ("implicit", "Expansion.Conjunction", [4, 5, 6, 7, 8, 9, 10, 11, 12, 13], [], []),
    ]
    i = 0
    for rel_type, label, train_secs, dev_secs, test_secs in plans:
        for section in [*train_secs, *dev_secs, *test_secs]:
            arg1, arg2 = _pdtb_text(label, i, rel_type)
            records.append(
                {
                    "section": section,
                    "type": rel_type,
                    "arg1": arg1,
                    "arg2": arg2,
                    "connective": _CONNECTIVES[label],
                    "label": label,
                    "doc_id": f"wsj-{section:02d}{i:02d}",
                }
            )
            i += 1
    for section in (1, 24):  # annotated but outside the 2-23 ranges
        arg1, arg2 = _pdtb_text("Comparison.Contrast", i, "explicit")
        records.append(
            {
                "section": section,
                "type": "explicit",
                "arg1": arg1,
                "arg2": arg2,
                "connective": "but",
                "label": "Comparison.Contrast",
                "doc_id": f"wsj-{section:02d}{i:02d}",
            }
        )
        i += 1
    assert len(records) == 60
    return records


def fixture_pdtb_jsonl() -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in fixture_pdtb_records())


# --- RST fixture ------------------------------------------------------------


def fixture_rst_records() -> list[dict]:
    """Small discourse-tree corpus.

    "attribution-example" reproduces the canonical shape: a two-EDU nucleus
    pair attributed to a third EDU, so the root instance averages EDUs 1-2 on
    the left against EDU 3 on the right with label NN-Attribution.
    "joint-four" has a 4-child node to exercise right-branching binarization.
    """
    attribution = {
        "doc_id": "attribution-example",
        "split": "train",
        "edus": [
            "The city council approved the transit budget in early March",
            "and it expanded the weekend service,",
            "according to the mayor's press office.",
        ],
        "root": {
            "relation": "Attribution",
            "nuclearity": "NN",
            "children": [
                {
                    "relation": "Joint",
                    "nuclearity": "NN",
                    "children": [{"edu": 1}, {"edu": 2}],
                },
                {"edu": 3},
            ],
        },
    }
    joint_four = {
        "doc_id": "joint-four",
        "split": "train",
        "edus": [
            "The first crew cleared the road,",
            "the second crew repaired the bridge,",
            "the third crew restored power,",
            "and the last crew reopened the school.",
        ],
        "root": {
            "relation": "Joint",
            "nuclearity": "NN",
            "children": [{"edu": 1}, {"edu": 2}, {"edu": 3}, {"edu": 4}],
        },
    }
    contrast = {
        "doc_id": "contrast-dev",
        "split": "train",
        "edus": [
            "Sales rose sharply in the north,",
            "but they fell in the south,",
            "which surprised the analysts.",
        ],
        "root": {
            "relation": "Elaboration",
            "nuclearity": "NS",
            "children": [
                {
                    "relation": "Contrast",
                    "nuclearity": "NN",
                    "children": [{"edu": 1}, {"edu": 2}],
                },
                {"edu": 3},
            ],
        },
    }
    cause_test = {
        "doc_id": "cause-test",
        "split": "test",
        "edus": [
            "The plant shut down for a week",
            "because the inspection found a fault.",
        ],
        "root": {
            "relation": "Cause",
            "nuclearity": "NS",
            "children": [{"edu": 1}, {"edu": 2}],
        },
    }
    background_test = {
        "doc_id": "background-test",
        "split": "test",
        "edus": [
            "The festival dates back to the founding of the town.",
            "This year it drew a record crowd,",
            "and the organizers extended it by a day.",
        ],
        "root": {
            "relation": "Background",
            "nuclearity": "SN",
            "children": [
                {"edu": 1},
                {
                    "relation": "Joint",
                    "nuclearity": "NN",
                    "children": [{"edu": 2}, {"edu": 3}],
                },
            ],
        },
    }
    return [attribution, joint_four, contrast, cause_test, background_test]


def fixture_rst_jsonl() -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in fixture_rst_records())
