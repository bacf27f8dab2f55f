"""Adapting PDTB-style relation fixtures into sentence-pair datasets.

Fixture schema (JSON Lines, one record per line):

    {"section": int, "type": "explicit"|"implicit", "arg1": str, "arg2": str,
     "connective": str, "label": str, "doc_id": str (optional)}

The native Treebank formats are out of scope; section is the WSJ section
number (0-24), label the level-2 relation type, connective the marker between
the arguments (annotator-inserted for implicit records).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from ..corpus import Sentence
from ..errors import MalformedRecord, UnknownSectionNumber
from .instances import DatasetSplit, LabelSpace, PairRelInstance

TRAIN_SECTIONS = range(2, 15)
DEV_SECTIONS = range(15, 19)
TEST_SECTIONS = range(19, 24)

REL_TYPES = ("explicit", "implicit")


@dataclass(frozen=True)
class PdtbRecord:
    section: int
    rel_type: str
    arg1: str
    arg2: str
    connective: str
    label: str
    doc_id: str


def parse_pdtb_records(stream: Iterable[str]) -> list[PdtbRecord]:
    records = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
        try:
            section = obj["section"]
            rel_type = obj["type"]
            arg1 = obj["arg1"]
            arg2 = obj["arg2"]
            connective = obj.get("connective", "")
            label = obj["label"]
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(line_no, f"missing field {exc}") from None
        if not isinstance(section, int) or isinstance(section, bool):
            raise MalformedRecord(line_no, f"section must be an integer, got {section!r}")
        if not 0 <= section <= 24:
            raise UnknownSectionNumber(section)
        if rel_type not in REL_TYPES:
            raise MalformedRecord(line_no, f"type must be explicit or implicit, got {rel_type!r}")
        if not (isinstance(arg1, str) and arg1.strip() and isinstance(arg2, str) and arg2.strip()):
            raise MalformedRecord(line_no, "arg1/arg2 must be nonempty strings")
        if not isinstance(label, str) or not label:
            raise MalformedRecord(line_no, "label must be a nonempty string")
        doc_id = obj.get("doc_id") or f"wsj-sec{section:02d}"
        records.append(
            PdtbRecord(
                section=section,
                rel_type=rel_type,
                arg1=arg1,
                arg2=arg2,
                connective=connective,
                label=label,
                doc_id=doc_id,
            )
        )
    return records


def _is_boundary(text: str, pos: int) -> bool:
    return pos <= 0 or pos >= len(text) or not text[pos - 1].isalnum() or not text[pos].isalnum()


def remove_connective(arg2: str, connective: str) -> str:
    """Drop the connective span from the second argument.

    The span is removed from the start when it prefixes arg2; otherwise the
    first whole-word occurrence goes. Whitespace is re-collapsed afterwards.
    """
    conn = connective.strip()
    if not conn:
        return arg2
    low, conn_low = arg2.lower(), conn.lower()
    if low.startswith(conn_low) and _is_boundary(arg2, len(conn)):
        cut = arg2[len(conn):]
    else:
        start = 0
        found = -1
        while True:
            idx = low.find(conn_low, start)
            if idx < 0:
                break
            if _is_boundary(arg2, idx) and _is_boundary(arg2, idx + len(conn)):
                found = idx
                break
            start = idx + 1
        if found < 0:
            return arg2
        cut = arg2[:found] + arg2[found + len(conn):]
    return " ".join(cut.split())


@dataclass
class PdtbAdaptResult:
    explicit: DatasetSplit
    explicit_labels: LabelSpace
    implicit: DatasetSplit
    implicit_labels: LabelSpace


def _route(section: int) -> str | None:
    if section in TRAIN_SECTIONS:
        return "train"
    if section in DEV_SECTIONS:
        return "dev"
    if section in TEST_SECTIONS:
        return "test"
    return None  # sections 0, 1, 24: annotated but outside the evaluation split


def adapt_pdtb(records: list[PdtbRecord], min_label_count: int = 10) -> PdtbAdaptResult:
    """Split by WSJ section, drop rare labels, strip explicit connectives.

    Explicit and implicit relations form independent datasets and label
    spaces; a label with fewer than min_label_count training instances is
    removed from every split of its dataset.
    """
    routed: dict[str, dict[str, list[PdtbRecord]]] = {
        t: {"train": [], "dev": [], "test": []} for t in REL_TYPES
    }
    for rec in records:
        split = _route(rec.section)
        if split is None:
            continue
        routed[rec.rel_type][split].append(rec)

    results = {}
    for rel_type, task in (("explicit", "pdtb-e"), ("implicit", "pdtb-i")):
        train_counts: dict[str, int] = {}
        for rec in routed[rel_type]["train"]:
            train_counts[rec.label] = train_counts.get(rec.label, 0) + 1
        kept = sorted(label for label, n in train_counts.items() if n >= min_label_count)
        space = LabelSpace(task, tuple(kept))
        index = {name: i for i, name in enumerate(kept)}

        splits: dict[str, list[PairRelInstance]] = {}
        for split_name, recs in routed[rel_type].items():
            instances = []
            per_doc: dict[str, int] = {}
            for rec in recs:
                label_idx = index.get(rec.label)
                if label_idx is None:
                    continue  # filtered label: discard, not an error
                arg2 = remove_connective(rec.arg2, rec.connective) if rel_type == "explicit" else rec.arg2
                k = per_doc.get(rec.doc_id, 0)
                per_doc[rec.doc_id] = k + 1
                instances.append(
                    PairRelInstance(
                        s1=Sentence.from_raw(rec.arg1),
                        s2=Sentence.from_raw(arg2),
                        label=label_idx,
                        source_doc_id=rec.doc_id,
                        instance_id=f"{rec.doc_id}#{k:06d}",
                    )
                )
            splits[split_name] = instances
        results[rel_type] = (
            DatasetSplit(task, splits["train"], splits["dev"], splits["test"]),
            space,
        )
    return PdtbAdaptResult(
        explicit=results["explicit"][0],
        explicit_labels=results["explicit"][1],
        implicit=results["implicit"][0],
        implicit_labels=results["implicit"][1],
    )
