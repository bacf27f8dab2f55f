"""Discourse-tree fixtures: right-branching binarization and node extraction.

Fixture schema (JSON Lines, one document per line):

    {"doc_id": str, "split": "train"|"test", "edus": [str, ...], "root": node}

where node is either {"edu": k} (1-based leaf) or
{"relation": str, "nuclearity": "NN"|"NS"|"SN", "children": [node, ...]}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Union

from ..corpus import Sentence
from ..errors import EmptySpan, MalformedRecord, UnaryNode
from .instances import DatasetSplit, LabelSpace, RSTNodeInstance

# The coarse relation inventory used for node labels.
RST_RELATIONS = (
    "Attribution",
    "Background",
    "Cause",
    "Comparison",
    "Condition",
    "Contrast",
    "Elaboration",
    "Enablement",
    "Evaluation",
    "Explanation",
    "Joint",
    "Manner-Means",
    "Same-unit",
    "Summary",
    "Temporal",
    "Textual-organization",
    "Topic-Change",
    "Topic-Comment",
)

NUCLEARITIES = ("NN", "NS", "SN")

LABEL_MODES = ("relation", "nuclearity_relation")


@dataclass(frozen=True)
class RSTLeaf:
    edu: int  # 1-based EDU index


@dataclass(frozen=True)
class RSTTree:
    children: tuple[Union["RSTTree", RSTLeaf], ...]
    relation: str
    nuclearity: str


@dataclass(frozen=True)
class RSTDocument:
    doc_id: str
    split: str  # "train" | "test"
    edus: tuple[Sentence, ...]
    root: RSTTree | RSTLeaf


def binarize_rst(node: RSTTree | RSTLeaf) -> RSTTree | RSTLeaf:
    """Right-branching binarization: (c1, ..., cn) -> (c1, node(c2, ..., cn)).

    Synthetic inner nodes inherit the original relation and nuclearity; the
    in-order leaf sequence is preserved. Idempotent on binary trees.
    """
    if isinstance(node, RSTLeaf):
        return node
    if len(node.children) < 2:
        raise UnaryNode(f"internal node with {len(node.children)} child(ren)")
    if len(node.children) == 2:
        left, right = node.children
        return RSTTree((binarize_rst(left), binarize_rst(right)), node.relation, node.nuclearity)
    rest = RSTTree(node.children[1:], node.relation, node.nuclearity)
    return RSTTree((binarize_rst(node.children[0]), binarize_rst(rest)), node.relation, node.nuclearity)


def leaf_edus(node: RSTTree | RSTLeaf) -> list[int]:
    if isinstance(node, RSTLeaf):
        return [node.edu]
    out: list[int] = []
    for child in node.children:
        out.extend(leaf_edus(child))
    return out


def node_label(node: RSTTree, mode: str = "nuclearity_relation") -> str:
    if mode == "relation":
        return node.relation
    return f"{node.nuclearity}-{node.relation}"


def extract_rst_instances(
    tree: RSTTree | RSTLeaf,
    edus: tuple[Sentence, ...],
    doc_id: str = "doc",
    label_space: LabelSpace | None = None,
    label_mode: str = "nuclearity_relation",
) -> tuple[list[RSTNodeInstance], LabelSpace]:
    """One instance per internal node of a binarized tree.

    Each instance carries the EDU spans of the node's two children; the label
    is the node's nuclearity pattern plus coarse relation (or the relation
    alone, per label_mode).
    """
    internal: list[RSTTree] = []

    def visit(node):
        if isinstance(node, RSTLeaf):
            return
        if len(node.children) != 2:
            raise UnaryNode("extract_rst_instances requires a binarized tree")
        internal.append(node)
        for child in node.children:
            visit(child)

    visit(tree)
    if label_space is None:
        names = sorted({node_label(n, label_mode) for n in internal})
        label_space = LabelSpace("rst", tuple(names))
    index = {name: i for i, name in enumerate(label_space.names)}

    instances = []
    for k, node in enumerate(internal):
        left, right = node.children
        left_span = leaf_edus(left)
        right_span = leaf_edus(right)
        if not left_span or not right_span:
            raise EmptySpan("internal node with an empty child span")
        instances.append(
            RSTNodeInstance(
                left_edus=tuple(edus[i - 1] for i in left_span),
                right_edus=tuple(edus[i - 1] for i in right_span),
                label=index[node_label(node, label_mode)],
                source_doc_id=doc_id,
                instance_id=f"{doc_id}#{k:06d}",
            )
        )
    return instances, label_space


def _parse_node(obj, line_no: int, n_edus: int) -> RSTTree | RSTLeaf:
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "tree node must be a JSON object")
    if "edu" in obj:
        edu = obj["edu"]
        if not isinstance(edu, int) or not 1 <= edu <= n_edus:
            raise MalformedRecord(line_no, f"leaf edu index {edu!r} outside [1, {n_edus}]")
        return RSTLeaf(edu)
    try:
        relation = obj["relation"]
        nuclearity = obj["nuclearity"]
        children = obj["children"]
    except KeyError as exc:
        raise MalformedRecord(line_no, f"missing node field {exc}") from None
    if relation not in RST_RELATIONS:
        raise MalformedRecord(line_no, f"unknown relation {relation!r}")
    if nuclearity not in NUCLEARITIES:
        raise MalformedRecord(line_no, f"unknown nuclearity {nuclearity!r}")
    if not isinstance(children, list) or len(children) < 2:
        raise MalformedRecord(line_no, "internal node needs >= 2 children")
    return RSTTree(tuple(_parse_node(c, line_no, n_edus) for c in children), relation, nuclearity)


def parse_rst_records(stream: Iterable[str]) -> list[RSTDocument]:
    docs = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
        try:
            doc_id = obj["doc_id"]
            split = obj["split"]
            edus_raw = obj["edus"]
            root_raw = obj["root"]
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(line_no, f"missing field {exc}") from None
        if split not in ("train", "test"):
            raise MalformedRecord(line_no, f"split must be train or test, got {split!r}")
        if not isinstance(edus_raw, list) or not edus_raw:
            raise MalformedRecord(line_no, "edus must be a nonempty list")
        edus = tuple(Sentence.from_raw(e) for e in edus_raw)
        root = _parse_node(root_raw, line_no, len(edus))
        docs.append(RSTDocument(doc_id=doc_id, split=split, edus=edus, root=root))
    return docs


def adapt_rst(
    docs: list[RSTDocument],
    dev_doc_ids: Iterable[str] = (),
    label_mode: str = "nuclearity_relation",
) -> tuple[DatasetSplit, LabelSpace]:
    """Binarize every tree and emit one dataset over all documents.

    Documents marked split="test" go to test; training documents named in
    dev_doc_ids form the validation set (the treebank does not designate one).
    """
    if label_mode not in LABEL_MODES:
        raise ValueError(f"label_mode must be one of {LABEL_MODES}")
    dev_ids = set(dev_doc_ids)
    binarized = [(doc, binarize_rst(doc.root)) for doc in docs]

    names: set[str] = set()
    for _, root in binarized:
        def collect(node):
            if isinstance(node, RSTLeaf):
                return
            names.add(node_label(node, label_mode))
            for child in node.children:
                collect(child)

        collect(root)
    space = LabelSpace("rst", tuple(sorted(names)))

    buckets: dict[str, list[RSTNodeInstance]] = {"train": [], "dev": [], "test": []}
    for doc, root in binarized:
        instances, _ = extract_rst_instances(root, doc.edus, doc.doc_id, space, label_mode)
        if doc.split == "test":
            buckets["test"].extend(instances)
        elif doc.doc_id in dev_ids:
            buckets["dev"].extend(instances)
        else:
            buckets["train"].extend(instances)
    return DatasetSplit("rst", buckets["train"], buckets["dev"], buckets["test"]), space
