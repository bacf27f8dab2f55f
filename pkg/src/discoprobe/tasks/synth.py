"""Deterministic synthesis of the five probing datasets from corpora.

All generators follow the same recipe: documents (or threads) are assigned to
train/dev/test first, so splits never share a source; instance windows are
then sampled per split with RNG streams derived from (seed, task, split), and
output is canonically ordered by instance id. Identical (corpus, seed,
counts) therefore reproduce byte-identical datasets.
"""

from __future__ import annotations

import random
from typing import Sequence

from ..corpus import Document, Sentence, Thread
from ..errors import (
    EmptyCategorySet,
    InsufficientDocuments,
    InsufficientThreads,
    NoAbstract,
    NoDistractorAvailable,
    UnassignedDocument,
)
from .instances import (
    BSOInstance,
    DatasetSplit,
    DCInstance,
    SPInstance,
    SSPInstance,
    SPLIT_NAMES,
)

Counts = tuple[int, int, int]


def _rng(seed: int, *scope: str) -> random.Random:
    """Seed a stream from a stable string; immune to PYTHONHASHSEED."""
    return random.Random(":".join([str(seed), *scope]))


def _assign_units(
    units: list[tuple[str, int]],
    counts: Counts,
    rng: random.Random,
    error_cls=InsufficientDocuments,
    min_units: int = 1,
) -> dict[str, str]:
    """Greedy capacity-weighted assignment of source units to splits."""
    order = [u for u in units if u[1] > 0]
    rng.shuffle(order)
    deficit = dict(zip(SPLIT_NAMES, counts))
    n_assigned = {s: 0 for s in SPLIT_NAMES}
    assignment: dict[str, str] = {}
    spare = []
    for unit_id, capacity in order:
        split = max(SPLIT_NAMES, key=lambda s: deficit[s])
        if deficit[split] <= 0:
            spare.append(unit_id)
            continue
        assignment[unit_id] = split
        deficit[split] -= capacity
        n_assigned[split] += 1
    for split in SPLIT_NAMES:  # e.g. coherence negatives need a same-split distractor
        while n_assigned[split] < min_units:
            if not spare:
                raise error_cls(sum(counts), sum(c for _, c in units))
            assignment[spare.pop()] = split
            n_assigned[split] += 1
    short = [s for s in SPLIT_NAMES if deficit[s] > 0]
    if short:
        raise error_cls(sum(counts), sum(c for _, c in units))
    return assignment


def _pick_windows(
    per_doc: list[tuple[str, list]],
    count: int,
    rng: random.Random,
    error_cls=InsufficientDocuments,
) -> list[tuple[str, int, object]]:
    """Sample `count` windows from [(doc_id, windows)] and order them canonically."""
    pool = [(doc_id, idx, window) for doc_id, windows in per_doc for idx, window in enumerate(windows)]
    if len(pool) < count:
        raise error_cls(count, len(pool))
    chosen = rng.sample(pool, count) if len(pool) > count else list(pool)
    chosen.sort(key=lambda item: (item[0], item[1]))
    return chosen


def _balanced_labels(count: int, rng: random.Random) -> list[int]:
    """Half ones, half zeros (ones get the extra for odd counts), shuffled."""
    labels = [1] * (count - count // 2) + [0] * (count // 2)
    rng.shuffle(labels)
    return labels


def _instance_ids(chosen: Sequence[tuple[str, int, object]]) -> list[str]:
    ids = []
    per_doc: dict[str, int] = {}
    for doc_id, _, _ in chosen:
        k = per_doc.get(doc_id, 0)
        per_doc[doc_id] = k + 1
        ids.append(f"{doc_id}#{k:06d}")
    return ids


def _sp_windows(doc: Document, any_window: bool) -> list[tuple[Sentence, ...]]:
    if any_window:
        flat = [fs.sentence for fs in doc.flat_sentences()]
        return [tuple(flat[i : i + 5]) for i in range(len(flat) - 4)]
    first_para = doc.sections[0].paragraphs[0]
    if len(first_para) >= 5:
        return [tuple(first_para[:5])]
    return []


def synth_sp(
    docs: list[Document],
    rng_seed: int,
    counts: Counts,
    any_window: bool = False,
) -> DatasetSplit:
    """Move one of five consecutive sentences to the front; label = its old slot.

    By default each document contributes only the first five sentences of its
    first paragraph; any_window=True admits every 5-sentence window, for small
    corpora.
    """
    windows = {doc.id: _sp_windows(doc, any_window) for doc in docs}
    units = [(doc.id, len(windows[doc.id])) for doc in docs]
    assignment = _assign_units(units, counts, _rng(rng_seed, "sp", "assign"))

    split_lists: dict[str, list] = {}
    for split, count in zip(SPLIT_NAMES, counts):
        per_doc = [(doc.id, windows[doc.id]) for doc in docs if assignment.get(doc.id) == split]
        chosen = _pick_windows(per_doc, count, _rng(rng_seed, "sp", split, "pick"))
        label_rng = _rng(rng_seed, "sp", split, "labels")
        instances = []
        for (doc_id, _, window), instance_id in zip(chosen, _instance_ids(chosen)):
            i = label_rng.randrange(5)
            reordered = (window[i],) + window[:i] + window[i + 1 :]
            instances.append(
                SPInstance(sentences=reordered, label=i, source_doc_id=doc_id, instance_id=instance_id)
            )
        split_lists[split] = instances
    return DatasetSplit("sp", split_lists["train"], split_lists["dev"], split_lists["test"])


def synth_bso(docs: list[Document], rng_seed: int, counts: Counts) -> DatasetSplit:
    """Consecutive sentence pairs, half swapped; exact balance within each split."""
    windows = {}
    for doc in docs:
        flat = [fs.sentence for fs in doc.flat_sentences()]
        windows[doc.id] = [(flat[i], flat[i + 1]) for i in range(len(flat) - 1)]
    units = [(doc.id, len(windows[doc.id])) for doc in docs]
    assignment = _assign_units(units, counts, _rng(rng_seed, "bso", "assign"))

    split_lists: dict[str, list] = {}
    for split, count in zip(SPLIT_NAMES, counts):
        per_doc = [(doc.id, windows[doc.id]) for doc in docs if assignment.get(doc.id) == split]
        chosen = _pick_windows(per_doc, count, _rng(rng_seed, "bso", split, "pick"))
        labels = _balanced_labels(count, _rng(rng_seed, "bso", split, "labels"))
        instances = []
        for (doc_id, _, pair), instance_id, label in zip(chosen, _instance_ids(chosen), labels):
            s1, s2 = pair if label == 1 else (pair[1], pair[0])
            instances.append(
                BSOInstance(s1=s1, s2=s2, label=label, source_doc_id=doc_id, instance_id=instance_id)
            )
        split_lists[split] = instances
    return DatasetSplit("bso", split_lists["train"], split_lists["dev"], split_lists["test"])


def category_similarity(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """Category overlap as Jaccard similarity."""
    if not a:
        raise EmptyCategorySet("first category set is empty")
    if not b:
        return 0.0
    return len(a & b) / len(a | b)


def _dc_negative_sentence(
    source: Document,
    split_docs: list[Document],
    rng: random.Random,
    candidate_pool: int,
) -> Sentence:
    others = [d for d in split_docs if d.id != source.id]
    if not others:
        raise NoDistractorAvailable(f"no other document in split for {source.id!r}")
    if len(others) > candidate_pool:
        others = rng.sample(others, candidate_pool)
    best = min(others, key=lambda d: (-category_similarity(source.categories, d.categories), d.id))
    return rng.choice(best.flat_sentences()).sentence


def synth_dc_docs(
    docs: list[Document],
    rng_seed: int,
    counts: Counts,
    candidate_pool: int = 1000,
) -> DatasetSplit:
    """Six-sentence coherence windows; negatives replace one of positions 2-5
    with a sentence from the most category-similar other document."""
    eligible = [d for d in docs if d.num_sentences() >= 6 and d.categories]
    windows = {}
    for doc in eligible:
        flat = [fs.sentence for fs in doc.flat_sentences()]
        windows[doc.id] = [tuple(flat[i : i + 6]) for i in range(len(flat) - 5)]
    units = [(doc.id, len(windows[doc.id])) for doc in eligible]
    assignment = _assign_units(units, counts, _rng(rng_seed, "dc", "assign"), min_units=2)
    by_id = {doc.id: doc for doc in eligible}

    split_lists: dict[str, list] = {}
    for split, count in zip(SPLIT_NAMES, counts):
        split_docs = [doc for doc in eligible if assignment.get(doc.id) == split]
        per_doc = [(doc.id, windows[doc.id]) for doc in split_docs]
        chosen = _pick_windows(per_doc, count, _rng(rng_seed, "dc", split, "pick"))
        labels = _balanced_labels(count, _rng(rng_seed, "dc", split, "labels"))
        neg_rng = _rng(rng_seed, "dc", split, "negatives")
        instances = []
        for (doc_id, _, window), instance_id, label in zip(chosen, _instance_ids(chosen), labels):
            if label == 1:
                instances.append(
                    DCInstance(sentences=window, label=1, source_doc_id=doc_id, instance_id=instance_id)
                )
                continue
            slot = neg_rng.randrange(1, 5)  # 0-based; 1-based positions 2..5
            distractor = _dc_negative_sentence(by_id[doc_id], split_docs, neg_rng, candidate_pool)
            corrupted = window[:slot] + (distractor,) + window[slot + 1 :]
            instances.append(
                DCInstance(
                    sentences=corrupted,
                    label=0,
                    source_doc_id=doc_id,
                    instance_id=instance_id,
                    replaced_slot=slot + 1,
                )
            )
        split_lists[split] = instances
    return DatasetSplit("dc", split_lists["train"], split_lists["dev"], split_lists["test"])


def _is_system_utterance(raw: str) -> bool:
    return raw.lstrip().startswith(("***", "-->", "<--", "==="))


def _filtered_utterances(thread: Thread, min_tokens: int, max_tokens: int) -> list[Sentence]:
    return [
        u
        for u in thread.utterances
        if min_tokens <= len(u.tokens) <= max_tokens and not _is_system_utterance(u.raw)
    ]


def synth_dc_threads(
    threads: list[Thread],
    rng_seed: int,
    counts: Counts,
    min_tokens: int = 3,
    max_tokens: int = 60,
) -> DatasetSplit:
    """Coherence windows over conversation threads; negatives come from a
    different thread. Splits are thread-disjoint."""
    usable = {t.id: _filtered_utterances(t, min_tokens, max_tokens) for t in threads}
    eligible = [t for t in threads if len(usable[t.id]) >= 6]
    windows = {}
    for thread in eligible:
        utts = usable[thread.id]
        windows[thread.id] = [tuple(utts[i : i + 6]) for i in range(len(utts) - 5)]
    units = [(t.id, len(windows[t.id])) for t in eligible]
    assignment = _assign_units(
        units, counts, _rng(rng_seed, "dct", "assign"), InsufficientThreads, min_units=2
    )

    split_lists: dict[str, list] = {}
    for split, count in zip(SPLIT_NAMES, counts):
        split_threads = [t for t in eligible if assignment.get(t.id) == split]
        per_thread = [(t.id, windows[t.id]) for t in split_threads]
        chosen = _pick_windows(per_thread, count, _rng(rng_seed, "dct", split, "pick"), InsufficientThreads)
        labels = _balanced_labels(count, _rng(rng_seed, "dct", split, "labels"))
        neg_rng = _rng(rng_seed, "dct", split, "negatives")
        instances = []
        for (thread_id, _, window), instance_id, label in zip(chosen, _instance_ids(chosen), labels):
            if label == 1:
                instances.append(
                    DCInstance(sentences=window, label=1, source_doc_id=thread_id, instance_id=instance_id)
                )
                continue
            others = [t for t in split_threads if t.id != thread_id]
            if not others:
                raise NoDistractorAvailable(f"no other thread in split for {thread_id!r}")
            slot = neg_rng.randrange(1, 5)
            distractor_thread = neg_rng.choice(others)
            distractor = neg_rng.choice(usable[distractor_thread.id])
            corrupted = window[:slot] + (distractor,) + window[slot + 1 :]
            instances.append(
                DCInstance(
                    sentences=corrupted,
                    label=0,
                    source_doc_id=thread_id,
                    instance_id=instance_id,
                    replaced_slot=slot + 1,
                )
            )
        split_lists[split] = instances
    return DatasetSplit("dc-threads", split_lists["train"], split_lists["dev"], split_lists["test"])


def passes_ssp_filter(sentence: Sentence, min_tokens: int = 5, max_nonalpha: float = 0.4) -> bool:
    """Reject sentences that make section prediction too easy (short / equation-like)."""
    tokens = sentence.tokens
    if len(tokens) < min_tokens:
        return False
    nonalpha = sum(1 for t in tokens if not t.isalpha())
    return nonalpha / len(tokens) <= max_nonalpha


def _ssp_pools(doc: Document) -> tuple[list[Sentence], list[Sentence]]:
    """(abstract sentences, middle-section sentences) passing the easy-case filter."""
    def is_abstract(title: str) -> bool:
        return title.strip().casefold() == "abstract"

    def excluded(title: str) -> bool:
        t = title.casefold()
        return "introduction" in t or "conclusion" in t or is_abstract(title)

    abstract_secs = [s for s in doc.sections if is_abstract(s.title_raw)]
    if not abstract_secs:
        raise NoAbstract(doc.id)
    middle_secs = [s for s in doc.sections[1:-1] if not excluded(s.title_raw)]
    abstract = [
        s for sec in abstract_secs for para in sec.paragraphs for s in para if passes_ssp_filter(s)
    ]
    middle = [
        s for sec in middle_secs for para in sec.paragraphs for s in para if passes_ssp_filter(s)
    ]
    return abstract, middle


def synth_ssp(papers: list[Document], rng_seed: int, counts: Counts) -> DatasetSplit:
    """Abstract-vs-body sentence classification over paper-like documents."""
    pools = {doc.id: _ssp_pools(doc) for doc in papers}
    # Balanced sampling is bound by the smaller class, so that's the capacity.
    units = [(doc.id, 2 * min(len(pools[doc.id][0]), len(pools[doc.id][1]))) for doc in papers]
    assignment = _assign_units(units, counts, _rng(rng_seed, "ssp", "assign"))

    split_lists: dict[str, list] = {}
    for split, count in zip(SPLIT_NAMES, counts):
        split_ids = [doc.id for doc in papers if assignment.get(doc.id) == split]
        n_abstract = count - count // 2
        n_body = count // 2
        pick_rng = _rng(rng_seed, "ssp", split, "pick")
        abstract_pool = [(doc_id, idx, s) for doc_id in split_ids for idx, s in enumerate(pools[doc_id][0])]
        body_pool = [(doc_id, idx, s) for doc_id in split_ids for idx, s in enumerate(pools[doc_id][1])]
        if len(abstract_pool) < n_abstract or len(body_pool) < n_body:
            raise InsufficientDocuments(count, min(len(abstract_pool), len(body_pool)) * 2)
        chosen = [
            (doc_id, (0, idx), (s, 1))
            for doc_id, idx, s in (
                pick_rng.sample(abstract_pool, n_abstract) if len(abstract_pool) > n_abstract else abstract_pool
            )
        ] + [
            (doc_id, (1, idx), (s, 0))
            for doc_id, idx, s in (
                pick_rng.sample(body_pool, n_body) if len(body_pool) > n_body else body_pool
            )
        ]
        chosen.sort(key=lambda item: (item[0], item[1]))
        instances = [
            SSPInstance(sentence=s, label=label, source_doc_id=doc_id, instance_id=instance_id)
            for (doc_id, _, (s, label)), instance_id in zip(chosen, _instance_ids(chosen))
        ]
        split_lists[split] = instances
    return DatasetSplit("ssp", split_lists["train"], split_lists["dev"], split_lists["test"])


def split_by_document(instances: list, assignment: dict[str, str], task: str) -> DatasetSplit:
    """Route instances into splits by their source document's assignment."""
    buckets: dict[str, list] = {s: [] for s in SPLIT_NAMES}
    for inst in instances:
        split = assignment.get(inst.source_doc_id)
        if split is None:
            raise UnassignedDocument(inst.source_doc_id)
        if split not in buckets:
            raise ValueError(f"unknown split {split!r}")
        buckets[split].append(inst)
    result = DatasetSplit(task, buckets["train"], buckets["dev"], buckets["test"])
    assert result.document_disjoint()
    return result
