"""Structured document corpora: parsing, tokenization, vocabularies, word vectors.

Corpus files are JSON Lines, one document per line:

    {"id": str, "title": str, "categories": [str],
     "sections": [{"title": str, "level": int, "paragraphs": [[str, ...], ...]}, ...]}

Chat-style corpora use the thread schema: {"thread_id": str, "utterances": [str, ...]}.
Sentences arrive pre-segmented; no sentence splitter is applied.
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import (
    DimMismatch,
    DuplicateId,
    EmptyCorpus,
    LevelOutOfRange,
    MalformedRecord,
    UnreadableFile,
)

MIN_LEVEL = 1
MAX_LEVEL = 7

_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_raw(cls, raw: str) -> "Sentence":
        return cls(raw=raw, tokens=tuple(tokenize(raw)))


@dataclass(frozen=True)
class Section:
    title_raw: str
    title: tuple[str, ...]
    level: int
    paragraphs: tuple[tuple[Sentence, ...], ...]


@dataclass(frozen=True)
class Document:
    id: str
    title_raw: str
    title: tuple[str, ...]
    categories: frozenset[str]
    sections: tuple[Section, ...]

    def num_sentences(self) -> int:
        return sum(len(p) for s in self.sections for p in s.paragraphs)

    def flat_sentences(self) -> list["FlatSentence"]:
        """Sentences in document linear order with their structural coordinates."""
        out = []
        para_pos = 0
        for section in self.sections:
            for paragraph in section.paragraphs:
                for sent_pos, sentence in enumerate(paragraph):
                    out.append(FlatSentence(sentence, section, sent_pos, para_pos))
                para_pos += 1
        return out


@dataclass(frozen=True)
class FlatSentence:
    sentence: Sentence
    section: Section
    sent_pos: int
    para_pos: int


@dataclass(frozen=True)
class Thread:
    id: str
    utterances: tuple[Sentence, ...]


@dataclass(frozen=True)
class TrainingContext:
    """One encoder training example: a target sentence plus its document context."""

    target: Sentence
    prev: Sentence
    next: Sentence
    nesting_level: int
    sent_pos: int
    para_pos: int
    section_title: tuple[str, ...]
    doc_title: tuple[str, ...]
    doc_id: str = ""


def tokenize(raw: str) -> list[str]:
    """Lowercase, split on whitespace, split leading/trailing ASCII punctuation.

    Interior punctuation is kept ("ec's" stays one token). Idempotent on
    re-joined output.
    """
    tokens: list[str] = []
    for chunk in raw.lower().split():
        head: list[str] = []
        tail: list[str] = []
        i, j = 0, len(chunk)
        while i < j and chunk[i] in _PUNCT:
            head.append(chunk[i])
            i += 1
        while j > i and chunk[j - 1] in _PUNCT:
            tail.append(chunk[j - 1])
            j -= 1
        tokens.extend(head)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(reversed(tail))
    return tokens


def _parse_sentence(raw, line: int, where: str) -> Sentence:
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedRecord(line, f"empty sentence in {where}")
    sent = Sentence.from_raw(raw)
    if not sent.tokens:
        raise MalformedRecord(line, f"sentence tokenizes to nothing in {where}: {raw!r}")
    return sent


def _parse_document(record: dict, line: int) -> Document:
    try:
        doc_id = record["id"]
        title_raw = record["title"]
        categories = record.get("categories", [])
        sections_raw = record["sections"]
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(line, f"missing field {exc}") from None
    if not isinstance(doc_id, str) or not doc_id:
        raise MalformedRecord(line, "document id must be a nonempty string")
    if not isinstance(title_raw, str):
        raise MalformedRecord(line, "title must be a string")
    if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
        raise MalformedRecord(line, "categories must be a list of strings")

    sections = []
    for sec in sections_raw:
        try:
            sec_title = sec["title"]
            level = sec["level"]
            paragraphs_raw = sec["paragraphs"]
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(line, f"missing section field {exc}") from None
        if not isinstance(level, int) or isinstance(level, bool):
            raise MalformedRecord(line, f"section level must be an integer, got {level!r}")
        if not MIN_LEVEL <= level <= MAX_LEVEL:
            raise LevelOutOfRange(level)
        paragraphs = []
        for para in paragraphs_raw:
            if not isinstance(para, list):
                raise MalformedRecord(line, "paragraph must be a list of sentence strings")
            sentences = tuple(_parse_sentence(s, line, doc_id) for s in para)
            if sentences:  # empty paragraphs are dropped, they carry no position
                paragraphs.append(sentences)
        if paragraphs:
            sections.append(
                Section(
                    title_raw=sec_title,
                    title=tuple(tokenize(sec_title)),
                    level=level,
                    paragraphs=tuple(paragraphs),
                )
            )
    if not sections:
        raise MalformedRecord(line, f"document {doc_id!r} has no nonempty paragraph")
    return Document(
        id=doc_id,
        title_raw=title_raw,
        title=tuple(tokenize(title_raw)),
        categories=frozenset(categories),
        sections=tuple(sections),
    )


def parse_corpus(stream: Iterable[str] | TextIO) -> list[Document]:
    """Parse a JSONL document stream, validating structure and invariants."""
    docs: list[Document] = []
    seen: set[str] = set()
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "record is not a JSON object")
        doc = _parse_document(record, line_no)
        if doc.id in seen:
            raise DuplicateId(doc.id)
        seen.add(doc.id)
        docs.append(doc)
    return docs


def serialize_corpus(docs: Iterable[Document]) -> str:
    """Inverse of parse_corpus, up to whitespace normalization inside sentences."""
    lines = []
    for doc in docs:
        record = {
            "id": doc.id,
            "title": doc.title_raw,
            "categories": sorted(doc.categories),
            "sections": [
                {
                    "title": sec.title_raw,
                    "level": sec.level,
                    "paragraphs": [[s.raw for s in para] for para in sec.paragraphs],
                }
                for sec in doc.sections
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_threads(stream: Iterable[str] | TextIO) -> list[Thread]:
    """Parse the chat-thread JSONL schema."""
    threads: list[Thread] = []
    seen: set[str] = set()
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
        try:
            thread_id = record["thread_id"]
            utterances_raw = record["utterances"]
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(line_no, f"missing field {exc}") from None
        if not isinstance(thread_id, str) or not thread_id:
            raise MalformedRecord(line_no, "thread_id must be a nonempty string")
        if thread_id in seen:
            raise DuplicateId(thread_id)
        seen.add(thread_id)
        utterances = tuple(
            _parse_sentence(u, line_no, thread_id) for u in utterances_raw
        )
        threads.append(Thread(id=thread_id, utterances=utterances))
    return threads


PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass
class Vocab:
    """Deterministic token index: specials first, then tokens by descending frequency."""

    index_to_token: list[str] = field(default_factory=list)
    token_to_index: dict[str, int] = field(default_factory=dict)

    pad_index: int = 0
    unk_index: int = 1

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocab":
        vocab = cls()
        for token in [PAD_TOKEN, UNK_TOKEN, *tokens]:
            if token not in vocab.token_to_index:
                vocab.token_to_index[token] = len(vocab.index_to_token)
                vocab.index_to_token.append(token)
        return vocab

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, self.unk_index)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index(t) for t in tokens]


def _document_tokens(doc: Document) -> Iterator[str]:
    yield from doc.title
    for section in doc.sections:
        yield from section.title
        for paragraph in section.paragraphs:
            for sentence in paragraph:
                yield from sentence.tokens


def build_vocab(docs: list[Document], min_count: int = 1) -> Vocab:
    """Count tokens (sentences and titles) and keep those with frequency >= min_count."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if not docs:
        raise EmptyCorpus("no documents to build a vocabulary from")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(_document_tokens(doc))
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocab.from_tokens(kept)


def load_word_vectors(
    path,
    vocab: Vocab,
    dim: int,
    seed: int = 0,
) -> tuple[np.ndarray, int]:
    """Load a whitespace-separated "token v1 ... vd" vector file into a (V, dim) table.

    In-vocab rows are copied from the file; tokens absent from the file are
    initialized uniformly in [-0.05, 0.05] from the run seed (padding row stays
    zero). Returns (table, coverage) where coverage counts vocab tokens found.
    """
    rng = np.random.default_rng(seed)
    table = rng.uniform(-0.05, 0.05, size=(len(vocab), dim)).astype(np.float32)
    table[vocab.pad_index] = 0.0
    coverage = 0
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(path, str(exc)) from None
    with handle:
        for line in handle:
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimMismatch(dim, len(values))
            if token not in vocab:
                continue
            try:
                row = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise UnreadableFile(path, f"bad float for token {token!r}: {exc}") from None
            table[vocab.token_to_index[token]] = row
            coverage += 1
    return table, coverage


def context_windows(doc: Document) -> list[TrainingContext]:
    """One context per sentence with both neighbors inside the document.

    Neighbors cross paragraph and section boundaries but never documents;
    yields max(0, S - 2) contexts for a document with S sentences.
    """
    flat = doc.flat_sentences()
    contexts = []
    for i in range(1, len(flat) - 1):
        cur = flat[i]
        contexts.append(
            TrainingContext(
                target=cur.sentence,
                prev=flat[i - 1].sentence,
                next=flat[i + 1].sentence,
                nesting_level=cur.section.level,
                sent_pos=cur.sent_pos,
                para_pos=cur.para_pos,
                section_title=cur.section.title,
                doc_title=doc.title,
                doc_id=doc.id,
            )
        )
    return contexts
