"""Frozen-encoder probing: features, probe classifiers, accuracy reports.

Instances are embedded either by a trained encoder checkpoint or from a
precomputed embedding cache (the integration point for external encoders);
the encoder is never updated while probes train.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Sentence
from .errors import (
    DegenerateLabels,
    DimMismatch,
    EmptyTestSet,
    MalformedRow,
    MissingEmbedding,
    MissingTask,
    UnreadableFile,
    WrongArity,
)
from .nn import AdamState, adam_step, bigru_encode
from .nn.feedforward import FeedForward, feedforward_backward, feedforward_forward, make_feedforward
from .nn.ops import softmax_xent_batch
from .nn.params import EncoderParams
from .tasks.instances import DatasetSplit, LabelSpace, RSTNodeInstance
from .util import write_atomic

REPORT_COLUMNS = ("SP", "BSO", "DC", "SSP", "PDTB-E", "PDTB-I", "RST-DT")

TASK_COLUMN = {
    "sp": "SP",
    "bso": "BSO",
    "dc": "DC",
    "dc-threads": "DC",
    "ssp": "SSP",
    "pdtb-e": "PDTB-E",
    "pdtb-i": "PDTB-I",
    "rst": "RST-DT",
}

TASK_CONSTRUCTION = {
    "sp": "sp5",
    "bso": "bso3",
    "dc": "concat6",
    "dc-threads": "concat6",
    "ssp": "single",
    "pdtb-e": "pair4",
    "pdtb-i": "pair4",
    "rst": "pair4",
}

CONSTRUCTION_ARITY = {"pair4": 2, "sp5": 5, "bso3": 2, "concat6": 6, "single": 1, "sp1": 5}
CONSTRUCTION_WIDTH = {"pair4": 4, "sp5": 5, "bso3": 3, "concat6": 6, "single": 1, "sp1": 1}


# --- embedding sources ------------------------------------------------------


class EncoderSource:
    """Embeds sentences with a trained encoder; embeddings are memoized."""

    def __init__(self, params: EncoderParams):
        if params.vocab is None:
            raise ValueError("encoder checkpoint carries no vocabulary")
        self.params = params
        self.dim = params.config.sentence_dim
        self._memo: dict[str, np.ndarray] = {}

    def embed_sentence(self, sentence: Sentence) -> np.ndarray:
        vec = self._memo.get(sentence.raw)
        if vec is None:
            ids = self.params.vocab.encode(sentence.tokens)
            vec = bigru_encode(ids, self.params.embedding, self.params.fwd, self.params.bwd)
            self._memo[sentence.raw] = vec
        return vec

    def embed_slot(self, instance_id: str, slot: int, sentence: Sentence) -> np.ndarray:
        return self.embed_sentence(sentence)


class CacheSource:
    """Per-instance precomputed embeddings keyed by (instance_id, slot)."""

    def __init__(self, vectors: dict[tuple[str, int], np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    def embed_slot(self, instance_id: str, slot: int, sentence: Sentence) -> np.ndarray:
        vec = self.vectors.get((instance_id, slot))
        if vec is None:
            raise MissingEmbedding(instance_id)
        return vec


def load_embedding_cache(path) -> CacheSource:
    """Read the cache TSV: header "#dim d", rows "instance_id\\tslot\\tv1 ... vd"."""
    vectors: dict[tuple[str, int], np.ndarray] = {}
    dim = None
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(path, str(exc)) from None
    with handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "dim":
                    dim = int(parts[1])
                continue
            cells = line.split("\t")
            if len(cells) != 3:
                raise MalformedRow(line_no, "cache rows need instance_id, slot, vector")
            instance_id, slot_str, vec_str = cells
            try:
                slot = int(slot_str)
                vec = np.array([float(v) for v in vec_str.split(" ")], dtype=np.float32)
            except ValueError as exc:
                raise MalformedRow(line_no, str(exc)) from None
            if dim is None:
                raise MalformedRow(line_no, "missing '#dim d' header")
            if vec.shape[0] != dim:
                raise DimMismatch(dim, vec.shape[0])
            vectors[(instance_id, slot)] = vec
    if dim is None:
        raise UnreadableFile(path, "missing '#dim d' header")
    return CacheSource(vectors, dim)


def write_embedding_cache(path, dim: int, rows) -> None:
    """rows: iterable of (instance_id, slot, vector)."""
    buf = io.StringIO()
    buf.write(f"#dim {dim}\n")
    for instance_id, slot, vec in rows:
        values = " ".join(repr(float(v)) for v in np.asarray(vec))
        buf.write(f"{instance_id}\t{slot}\t{values}\n")
    write_atomic(path, buf.getvalue())


def instance_sentences(inst) -> list[Sentence]:
    """Sentences of an instance in slot order (RST: left EDUs then right EDUs)."""
    if isinstance(inst, RSTNodeInstance):
        return [*inst.left_edus, *inst.right_edus]
    if hasattr(inst, "sentences"):
        return list(inst.sentences)
    if hasattr(inst, "s1"):
        return [inst.s1, inst.s2]
    return [inst.sentence]


def embed_instances(instances, source) -> list[list[np.ndarray]]:
    """Embed every slot of every instance.

    For discourse-tree nodes the two returned vectors are the arithmetic
    means of the left and right EDU embeddings.
    """
    out = []
    for inst in instances:
        sentences = instance_sentences(inst)
        vectors = []
        for slot, sentence in enumerate(sentences):
            vec = source.embed_slot(inst.instance_id, slot, sentence)
            if vec.shape[0] != source.dim:
                raise DimMismatch(source.dim, vec.shape[0])
            vectors.append(vec)
        if isinstance(inst, RSTNodeInstance):
            n_left = len(inst.left_edus)
            left = np.mean(vectors[:n_left], axis=0)
            right = np.mean(vectors[n_left:], axis=0)
            out.append([left, right])
        else:
            out.append(vectors)
    return out


# --- feature constructions --------------------------------------------------


def build_features(vectors: list[np.ndarray], construction: str) -> np.ndarray:
    """Map an instance's slot embeddings to the probe input vector."""
    if construction not in CONSTRUCTION_ARITY:
        raise ValueError(f"unknown construction {construction!r}")
    if len(vectors) != CONSTRUCTION_ARITY[construction]:
        raise WrongArity(construction, len(vectors))
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise DimMismatch(vectors[0].shape[0], sorted(dims)[-1])
    if construction == "pair4":
        x1, x2 = vectors
        return np.concatenate([x1, x2, x1 * x2, np.abs(x1 - x2)])
    if construction == "sp5":
        x1 = vectors[0]
        return np.concatenate([x1, *(x1 - x for x in vectors[1:])])
    if construction == "bso3":
        x1, x2 = vectors
        return np.concatenate([x1, x2, x1 - x2])
    if construction == "concat6":
        return np.concatenate(vectors)
    if construction == "sp1":
        return vectors[0].copy()
    return vectors[0].copy()  # single


def feature_matrix(embedded: list[list[np.ndarray]], construction: str) -> np.ndarray:
    return np.stack([build_features(vectors, construction) for vectors in embedded]).astype(np.float32)


# --- probes -------------------------------------------------------------


@dataclass(frozen=True)
class ProbeSpec:
    task: str
    construction: str
    k: int
    hidden: int | None = None  # sigmoid hidden width; None = plain softmax regression
    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 5
    l2_grid: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2)
    seed: int = 13


def default_probe_spec(task: str, k: int, feature_dim: int, seed: int = 13) -> ProbeSpec:
    """Per-task probe defaults: logistic regression everywhere except the
    coherence tasks, which need a sigmoid hidden layer."""
    construction = TASK_CONSTRUCTION[task]
    hidden = None
    if construction == "concat6":
        hidden = min(2000, 4 * feature_dim)
    return ProbeSpec(task=task, construction=construction, k=k, hidden=hidden, seed=seed)


@dataclass
class Probe:
    spec: ProbeSpec
    ff: FeedForward
    l2: float
    dev_accuracy: float


@dataclass(frozen=True)
class EvalResult:
    task: str
    dev_accuracy: float
    test_accuracy: float
    l2: float
    seed: int
    feature_dim: int
    domain: str = ""


def _make_probe_ff(spec: ProbeSpec, feature_dim: int, rng: np.random.Generator) -> FeedForward:
    if spec.hidden is None:
        return make_feedforward(rng, [feature_dim, spec.k], ["linear"])
    return make_feedforward(rng, [feature_dim, spec.hidden, spec.k], ["sigmoid", "linear"])


def _probe_flat(ff: FeedForward) -> dict[str, np.ndarray]:
    flat = {}
    for i, (w, b) in enumerate(zip(ff.weights, ff.biases)):
        flat[f"W{i}"] = w
        flat[f"b{i}"] = b
    return flat


def _probe_from_flat(ff: FeedForward, flat: dict[str, np.ndarray]) -> FeedForward:
    n = len(ff.weights)
    return FeedForward(
        [flat[f"W{i}"] for i in range(n)],
        [flat[f"b{i}"] for i in range(n)],
        list(ff.activations),
    )


def probe_loss(
    flat: dict[str, np.ndarray],
    activations: list[str],
    x: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy plus L2 on weight matrices; analytic gradients."""
    n = len(activations)
    ff = FeedForward([flat[f"W{i}"] for i in range(n)], [flat[f"b{i}"] for i in range(n)], activations)
    logits, cache = feedforward_forward(x, ff)
    loss, d_logits = softmax_xent_batch(logits, y)
    _, grads = feedforward_backward(d_logits, cache, ff)
    out = {}
    for i, (dw, db) in enumerate(grads):
        w = flat[f"W{i}"]
        if l2:
            loss += 0.5 * l2 * float(np.sum(w.astype(np.float64) ** 2))
            dw = dw + l2 * w
        out[f"W{i}"] = dw
        out[f"b{i}"] = db
    return loss, out


def _accuracy(ff: FeedForward, x: np.ndarray, y: np.ndarray) -> float:
    logits, _ = feedforward_forward(x, ff)
    return float(np.mean(np.argmax(logits, axis=1) == y))


def train_probe(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_dev: np.ndarray,
    y_dev: np.ndarray,
    spec: ProbeSpec,
) -> Probe:
    """Softmax probe trained with Adam; L2 chosen on dev; early stopping.

    Works purely on feature matrices, so the encoder that produced them is
    untouched by construction.
    """
    y_train = np.asarray(y_train, dtype=np.int64)
    y_dev = np.asarray(y_dev, dtype=np.int64)
    if len(set(y_train.tolist())) < 2:
        raise DegenerateLabels("training labels contain a single class")
    feature_dim = x_train.shape[1]
    best: tuple[float, int, dict, float] | None = None  # (dev_acc, -grid_idx, params, l2)

    for grid_idx, l2 in enumerate(spec.l2_grid):
        rng = np.random.default_rng(spec.seed)
        ff = _make_probe_ff(spec, feature_dim, rng)
        flat = _probe_flat(ff)
        state = AdamState(lr=spec.lr)
        shuffle_rng = np.random.default_rng(spec.seed + 1)
        best_epoch_acc = -1.0
        best_epoch_params = {k: v.copy() for k, v in flat.items()}
        stale = 0
        for _ in range(spec.max_epochs):
            perm = shuffle_rng.permutation(len(y_train))
            for start in range(0, len(perm), spec.batch_size):
                idx = perm[start : start + spec.batch_size]
                _, grads = probe_loss(flat, ff.activations, x_train[idx], y_train[idx], l2)
                flat, state = adam_step(flat, grads, state)
            acc = _accuracy(_probe_from_flat(ff, flat), x_dev, y_dev)
            if acc > best_epoch_acc:
                best_epoch_acc = acc
                best_epoch_params = {k: v.copy() for k, v in flat.items()}
                stale = 0
            else:
                stale += 1
                if stale >= spec.patience:
                    break
        candidate = (best_epoch_acc, -grid_idx, best_epoch_params, l2)
        if best is None or candidate[:2] > best[:2]:
            best = candidate

    dev_acc, _, params, l2 = best
    rng = np.random.default_rng(spec.seed)
    ff = _make_probe_ff(spec, feature_dim, rng)
    return Probe(spec=spec, ff=_probe_from_flat(ff, params), l2=l2, dev_accuracy=dev_acc)


def probe_predict(probe: Probe, x: np.ndarray) -> np.ndarray:
    logits, _ = feedforward_forward(x, probe.ff)
    return np.argmax(logits, axis=1)  # argmax breaks ties toward the lowest class


def evaluate_probe(probe: Probe, x_test: np.ndarray, y_test: np.ndarray) -> float:
    """Exact-match accuracy on the test features."""
    if len(y_test) == 0:
        raise EmptyTestSet("no test instances")
    return float(np.mean(probe_predict(probe, x_test) == np.asarray(y_test)))


def evaluate_task(
    split: DatasetSplit,
    labels: LabelSpace,
    source,
    seed: int = 13,
    spec: ProbeSpec | None = None,
    domain: str = "",
) -> EvalResult:
    """Embed a dataset, train the probe on train/dev, report test accuracy."""
    matrices = {}
    targets = {}
    for split_name, instances in split.items():
        embedded = embed_instances(instances, source)
        construction = spec.construction if spec is not None else TASK_CONSTRUCTION[split.task]
        matrices[split_name] = feature_matrix(embedded, construction)
        targets[split_name] = np.array([inst.label for inst in instances], dtype=np.int64)
    feature_dim = matrices["train"].shape[1]
    if spec is None:
        spec = default_probe_spec(split.task, labels.k, feature_dim, seed)
    probe = train_probe(matrices["train"], targets["train"], matrices["dev"], targets["dev"], spec)
    test_acc = evaluate_probe(probe, matrices["test"], targets["test"])
    return EvalResult(
        task=split.task,
        dev_accuracy=probe.dev_accuracy,
        test_accuracy=test_acc,
        l2=probe.l2,
        seed=spec.seed,
        feature_dim=feature_dim,
        domain=domain,
    )


# --- reports -------------------------------------------------------------


def make_report(results: list[EvalResult], requested: list[str] | None = None) -> tuple[str, str]:
    """Aggregate results into (report.csv text, report.txt text).

    Domains are averaged within their task column first; the "avg" column is
    the unweighted mean over the seven task columns and appears only when all
    seven are present. Accuracies are reported as percentages, one decimal.
    """
    by_column: dict[str, list[float]] = {}
    for res in results:
        column = TASK_COLUMN.get(res.task)
        if column is None:
            raise MissingTask(res.task)
        by_column.setdefault(column, []).append(res.test_accuracy)

    if requested is not None:
        requested_columns = []
        for task in requested:
            column = TASK_COLUMN.get(task, task)
            if column not in by_column:
                raise MissingTask(task)
            if column not in requested_columns:
                requested_columns.append(column)
        columns = [c for c in REPORT_COLUMNS if c in requested_columns]
    else:
        columns = [c for c in REPORT_COLUMNS if c in by_column]

    values = {c: 100.0 * sum(by_column[c]) / len(by_column[c]) for c in columns}
    if len(columns) == len(REPORT_COLUMNS):
        values["avg"] = sum(values[c] for c in columns) / len(columns)
        columns = columns + ["avg"]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerow([f"{values[c]:.1f}" for c in columns])
    csv_text = buf.getvalue()

    width = max(len(c) for c in columns) + 2
    header = "".join(c.rjust(width) for c in columns)
    row = "".join(f"{values[c]:.1f}".rjust(width) for c in columns)
    txt = header + "\n" + row + "\n"
    return csv_text, txt


def write_report(results: list[EvalResult], out_dir, requested: list[str] | None = None) -> tuple[Path, Path]:
    csv_text, txt = make_report(results, requested)
    out_dir = Path(out_dir)
    csv_path = out_dir / "report.csv"
    txt_path = out_dir / "report.txt"
    write_atomic(csv_path, csv_text)
    write_atomic(txt_path, txt)
    return csv_path, txt_path
