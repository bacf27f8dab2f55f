"""Instance shapes for the seven probing tasks, label spaces, and splits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from ..corpus import Sentence

SPLIT_NAMES = ("train", "dev", "test")


@dataclass(frozen=True)
class SPInstance:
    """Five sentences with one moved to the front; label = its original slot."""

    sentences: tuple[Sentence, ...]
    label: int
    source_doc_id: str
    instance_id: str

    def texts(self) -> tuple[str, ...]:
        return tuple(s.raw for s in self.sentences)


@dataclass(frozen=True)
class BSOInstance:
    """Sentence pair; label 1 iff kept in original order."""

    s1: Sentence
    s2: Sentence
    label: int
    source_doc_id: str
    instance_id: str

    def texts(self) -> tuple[str, ...]:
        return (self.s1.raw, self.s2.raw)


@dataclass(frozen=True)
class DCInstance:
    """Six-sentence window; label 1 iff left intact (coherent)."""

    sentences: tuple[Sentence, ...]
    label: int
    source_doc_id: str
    instance_id: str
    replaced_slot: int | None = None  # 1-based position of the substituted sentence

    def texts(self) -> tuple[str, ...]:
        return tuple(s.raw for s in self.sentences)


@dataclass(frozen=True)
class SSPInstance:
    """Single sentence; label 1 iff drawn from the abstract section."""

    sentence: Sentence
    label: int
    source_doc_id: str
    instance_id: str

    def texts(self) -> tuple[str, ...]:
        return (self.sentence.raw,)


@dataclass(frozen=True)
class PairRelInstance:
    """Adjacent sentence pair with an annotated discourse relation."""

    s1: Sentence
    s2: Sentence
    label: int
    source_doc_id: str
    instance_id: str

    def texts(self) -> tuple[str, ...]:
        return (self.s1.raw, self.s2.raw)


@dataclass(frozen=True)
class RSTNodeInstance:
    """Internal discourse-tree node: the EDU spans of its two children."""

    left_edus: tuple[Sentence, ...]
    right_edus: tuple[Sentence, ...]
    label: int
    source_doc_id: str
    instance_id: str

    def texts(self) -> tuple[str, ...]:
        return (
            " ||| ".join(s.raw for s in self.left_edus),
            " ||| ".join(s.raw for s in self.right_edus),
        )


TaskInstance = Union[SPInstance, BSOInstance, DCInstance, SSPInstance, PairRelInstance, RSTNodeInstance]


@dataclass(frozen=True)
class LabelSpace:
    task: str
    names: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


def sp_label_space() -> LabelSpace:
    return LabelSpace("sp", ("0", "1", "2", "3", "4"))


def bso_label_space() -> LabelSpace:
    return LabelSpace("bso", ("reversed", "in_order"))


def dc_label_space(task: str = "dc") -> LabelSpace:
    return LabelSpace(task, ("corrupted", "coherent"))


def ssp_label_space() -> LabelSpace:
    return LabelSpace("ssp", ("body", "abstract"))


@dataclass
class DatasetSplit:
    task: str
    train: list
    dev: list
    test: list

    def items(self) -> Iterator[tuple[str, list]]:
        yield "train", self.train
        yield "dev", self.dev
        yield "test", self.test

    def doc_ids(self, split: str) -> set[str]:
        return {inst.source_doc_id for inst in getattr(self, split)}

    def document_disjoint(self) -> bool:
        train, dev, test = (self.doc_ids(s) for s in SPLIT_NAMES)
        return not (train & dev) and not (train & test) and not (dev & test)

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.dev), len(self.test))
