"""Dataset TSV serialization.

One instance per line: column 1 is the integer label, the remaining columns
are raw sentence strings (SP: 5, BSO: 2, DC: 6, SSP: 1, PairRel: 2). RST rows
hold the label plus the left and right EDU groups, EDUs joined by " ||| ".
Files are named {task}.{split}.tsv, with {task}.labels.txt listing label
names in index order.
"""

from __future__ import annotations

from pathlib import Path

from ..corpus import Sentence
from ..errors import MalformedRow
from ..util import write_atomic
from .instances import (
    BSOInstance,
    DatasetSplit,
    DCInstance,
    LabelSpace,
    PairRelInstance,
    RSTNodeInstance,
    SPInstance,
    SSPInstance,
)

SENTENCE_ARITY = {"sp": 5, "bso": 2, "dc": 6, "dc-threads": 6, "ssp": 1, "pdtb-e": 2, "pdtb-i": 2}

SENTENCE_CLASSES = {
    "sp": SPInstance,
    "bso": BSOInstance,
    "dc": DCInstance,
    "dc-threads": DCInstance,
    "ssp": SSPInstance,
    "pdtb-e": PairRelInstance,
    "pdtb-i": PairRelInstance,
}


def _clean(text: str) -> str:
    # TSV cells cannot hold tabs or newlines.
    return " ".join(text.split())


def _instance_row(inst) -> str:
    return "\t".join([str(inst.label), *(_clean(t) for t in inst.texts())])


def serialize_dataset(split: DatasetSplit, labels: LabelSpace, out_dir) -> dict[str, Path]:
    """Write {task}.{split}.tsv files plus the labels file; returns the paths."""
    out_dir = Path(out_dir)
    task = split.task
    paths: dict[str, Path] = {}
    for split_name, instances in split.items():
        path = out_dir / f"{task}.{split_name}.tsv"
        body = "".join(_instance_row(inst) + "\n" for inst in instances)
        write_atomic(path, body)
        paths[split_name] = path
    labels_path = out_dir / f"{task}.labels.txt"
    write_atomic(labels_path, "".join(name + "\n" for name in labels.names))
    paths["labels"] = labels_path
    return paths


def _parse_row(task: str, split_name: str, line_no: int, row_idx: int, line: str):
    parts = line.rstrip("\n").split("\t")
    if len(parts) < 2:
        raise MalformedRow(line_no, "need a label and at least one sentence")
    try:
        label = int(parts[0])
    except ValueError:
        raise MalformedRow(line_no, f"label {parts[0]!r} is not an integer") from None
    if label < 0:
        raise MalformedRow(line_no, "negative label")
    cells = parts[1:]
    source = f"{task}.{split_name}"
    instance_id = f"{source}#{row_idx:06d}"

    if task == "rst":
        if len(cells) != 2:
            raise MalformedRow(line_no, f"rst rows need 2 groups, got {len(cells)}")
        left = tuple(Sentence.from_raw(t) for t in cells[0].split(" ||| "))
        right = tuple(Sentence.from_raw(t) for t in cells[1].split(" ||| "))
        if not left or not right:
            raise MalformedRow(line_no, "empty EDU group")
        return RSTNodeInstance(left, right, label, source, instance_id)

    arity = SENTENCE_ARITY[task]
    if len(cells) != arity:
        raise MalformedRow(line_no, f"{task} rows need {arity} sentences, got {len(cells)}")
    sentences = tuple(Sentence.from_raw(t) for t in cells)
    cls = SENTENCE_CLASSES[task]
    if cls is SPInstance or cls is DCInstance:
        return cls(sentences, label, source, instance_id)
    if cls is SSPInstance:
        return cls(sentences[0], label, source, instance_id)
    return cls(sentences[0], sentences[1], label, source, instance_id)


def deserialize_dataset(out_dir, task: str) -> tuple[DatasetSplit, LabelSpace]:
    """Read the three TSVs + labels file back; ids are regenerated positionally."""
    if task != "rst" and task not in SENTENCE_ARITY:
        raise ValueError(f"unknown task {task!r}")
    out_dir = Path(out_dir)
    buckets = {}
    for split_name in ("train", "dev", "test"):
        instances = []
        with open(out_dir / f"{task}.{split_name}.tsv", "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                instances.append(_parse_row(task, split_name, line_no, len(instances), line))
        buckets[split_name] = instances
    with open(out_dir / f"{task}.labels.txt", "r", encoding="utf-8") as handle:
        names = tuple(line.rstrip("\n") for line in handle if line.strip())
    labels = LabelSpace(task, names)
    for split_name, instances in buckets.items():
        for inst in instances:
            if inst.label >= labels.k:
                raise MalformedRow(0, f"label {inst.label} outside the {task} label space")
    return DatasetSplit(task, buckets["train"], buckets["dev"], buckets["test"]), labels
