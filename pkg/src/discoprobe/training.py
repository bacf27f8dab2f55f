"""The four multitask training objectives and the single-epoch training loop.

Every model trains with the neighbor-prediction loss; nesting-level,
position, and title losses are optional extras. Per batch the weighted losses
are summed, averaged over examples, and applied with one Adam step.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import TrainingContext, Vocab
from .errors import BothTitlesEmpty, EmptyCorpus, LevelOutOfRange, NonFiniteLoss
from .nn import AdamState, adam_step, bigru_encode_backward, bigru_encode_with_cache, bow_log_prob
from .nn.adam import ParamDict
from .nn.feedforward import feedforward_backward, feedforward_forward
from .nn.gru import GruParams
from .nn.ops import softmax_xent
from .nn.params import GRU_FIELD_NAMES, EncoderParams, save_checkpoint

logger = logging.getLogger(__name__)

LOSS_NAMES = ("nsp", "nl", "spp", "sdt")


@dataclass(frozen=True)
class LossConfig:
    losses: tuple[str, ...] = ("nsp",)
    weights: Mapping[str, float] = field(default_factory=dict)
    spp_caps: tuple[int, int] = (32, 64)
    batch_size: int = 64
    seed: int = 13
    lr: float = 1e-3
    normalize_bow: bool = True

    def validate(self) -> None:
        unknown = set(self.losses) - set(LOSS_NAMES)
        if unknown:
            raise ValueError(f"unknown losses {sorted(unknown)}")
        if "nsp" not in self.losses:
            raise ValueError("the neighbor-prediction loss is always enabled")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("loss weights must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def weight(self, name: str) -> float:
        return float(self.weights.get(name, 1.0))


@dataclass(frozen=True)
class TrainStepRecord:
    step: int
    head: str
    loss: float
    elapsed: float  # seconds since epoch start; not serialized


@dataclass
class TrainLog:
    steps: list[TrainStepRecord] = field(default_factory=list)
    summaries: dict = field(default_factory=dict)
    checkpoint_path: str | None = None

    def head_series(self, head: str) -> list[float]:
        return [rec.loss for rec in self.steps if rec.head == head]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"step": rec.step, "head": rec.head, "loss": rec.loss}) + "\n"
            for rec in self.steps
        )


@dataclass(frozen=True)
class _EncodedContext:
    target: tuple[int, ...]
    prev: tuple[int, ...]
    next: tuple[int, ...]
    nesting_level: int
    sent_pos: int
    para_pos: int
    section_title: tuple[int, ...]
    doc_title: tuple[int, ...]


def _encode_context(ctx: TrainingContext, vocab: Vocab) -> _EncodedContext:
    return _EncodedContext(
        target=tuple(vocab.encode(ctx.target.tokens)),
        prev=tuple(vocab.encode(ctx.prev.tokens)),
        next=tuple(vocab.encode(ctx.next.tokens)),
        nesting_level=ctx.nesting_level,
        sent_pos=ctx.sent_pos,
        para_pos=ctx.para_pos,
        section_title=tuple(vocab.encode(ctx.section_title)),
        doc_title=tuple(vocab.encode(ctx.doc_title)),
    )


def _add_head_grads(grads: ParamDict, head_name: str, head_grads, scale: float) -> None:
    for i, (dw, db) in enumerate(head_grads):
        grads[f"head.{head_name}.W{i}"] += scale * dw
        grads[f"head.{head_name}.b{i}"] += scale * db


def _xent_head(emb, head_name: str, label: int, params: EncoderParams, grads: ParamDict, scale: float):
    logits, cache = feedforward_forward(emb, params.heads[head_name])
    loss, d_logits = softmax_xent(logits, label)
    d_emb, head_grads = feedforward_backward(d_logits, cache, params.heads[head_name])
    _add_head_grads(grads, head_name, head_grads, scale)
    return loss, scale * d_emb


def _bow_head(emb, head_name: str, target_ids, params: EncoderParams, grads: ParamDict, scale: float, normalize: bool):
    loss, d_emb, head_grads = bow_log_prob(emb, target_ids, params.heads[head_name], normalize)
    _add_head_grads(grads, head_name, head_grads, scale)
    return loss, scale * d_emb


def _apply_losses(
    enc: _EncodedContext,
    params: EncoderParams,
    config: LossConfig,
    grads: ParamDict,
) -> dict[str, float]:
    """Forward + backward for all enabled heads of one example.

    Gradients (scaled by the per-loss weights) are accumulated into `grads`;
    returns the unweighted loss value per enabled head.
    """
    emb, cache = bigru_encode_with_cache(enc.target, params.embedding, params.fwd, params.bwd)
    d_emb = np.zeros_like(emb)
    losses: dict[str, float] = {}

    if "nsp" in config.losses:
        w = config.weight("nsp")
        l_prev, d1 = _bow_head(emb, "nsp_prev", enc.prev, params, grads, w, config.normalize_bow)
        l_next, d2 = _bow_head(emb, "nsp_next", enc.next, params, grads, w, config.normalize_bow)
        losses["nsp"] = l_prev + l_next
        d_emb += d1 + d2

    if "nl" in config.losses:
        w = config.weight("nl")
        if not 1 <= enc.nesting_level <= params.config.nl_classes:
            raise LevelOutOfRange(enc.nesting_level)
        loss, d = _xent_head(emb, "nl", enc.nesting_level - 1, params, grads, w)
        losses["nl"] = loss
        d_emb += d

    if "spp" in config.losses:
        w = config.weight("spp")
        sent_cap, para_cap = config.spp_caps
        l_sent, d1 = _xent_head(emb, "spp_sent", min(enc.sent_pos, sent_cap - 1), params, grads, w)
        l_para, d2 = _xent_head(emb, "spp_para", min(enc.para_pos, para_cap - 1), params, grads, w)
        losses["spp"] = l_sent + l_para
        d_emb += d1 + d2

    if "sdt" in config.losses:
        w = config.weight("sdt")
        if not enc.section_title and not enc.doc_title:
            raise BothTitlesEmpty("context has neither a section title nor a document title")
        total = 0.0
        for head_name, title in (("sdt_section", enc.section_title), ("sdt_doc", enc.doc_title)):
            if not title:
                logger.debug("empty title for %s; term skipped", head_name)
                continue
            loss, d = _bow_head(emb, head_name, title, params, grads, w, config.normalize_bow)
            total += loss
            d_emb += d
        losses["sdt"] = total

    d_fwd = GruParams(**{n: grads[f"gru_fwd.{n}"] for n in GRU_FIELD_NAMES})
    d_bwd = GruParams(**{n: grads[f"gru_bwd.{n}"] for n in GRU_FIELD_NAMES})
    bigru_encode_backward(d_emb, cache, params.fwd, params.bwd, grads["embedding"], d_fwd, d_bwd)
    return losses


def _single_loss(ctx: TrainingContext, params: EncoderParams, loss_name: str, **kwargs) -> tuple[float, ParamDict]:
    if params.vocab is None:
        raise ValueError("params must carry a vocabulary to encode raw contexts")
    grads = params.zero_grads()
    enc = _encode_context(ctx, params.vocab)
    losses = _apply_losses(enc, params, _OnlyLoss(LossConfig(**kwargs), loss_name), grads)
    return losses[loss_name], grads


class _OnlyLoss:
    """LossConfig view that enables a single head (bypasses the NSP-always rule)."""

    def __init__(self, base: LossConfig, name: str):
        self._base = base
        self.losses = (name,)
        self.spp_caps = base.spp_caps
        self.normalize_bow = base.normalize_bow

    def weight(self, name: str) -> float:
        return self._base.weight(name)


def nsp_loss(ctx: TrainingContext, params: EncoderParams, normalize: bool = True) -> tuple[float, ParamDict]:
    """Predict both neighbor sentences' token bags from the target encoding."""
    return _single_loss(ctx, params, "nsp", normalize_bow=normalize)


def nl_loss(ctx: TrainingContext, params: EncoderParams) -> tuple[float, ParamDict]:
    """Predict the section nesting level (class = level - 1)."""
    return _single_loss(ctx, params, "nl")


def spp_loss(ctx: TrainingContext, params: EncoderParams, spp_caps: tuple[int, int] = (32, 64)) -> tuple[float, ParamDict]:
    """Predict sentence-in-paragraph and paragraph-in-document positions."""
    return _single_loss(ctx, params, "spp", spp_caps=spp_caps)


def sdt_loss(ctx: TrainingContext, params: EncoderParams, normalize: bool = True) -> tuple[float, ParamDict]:
    """Predict section and document title bags; empty titles skip their term."""
    return _single_loss(ctx, params, "sdt", normalize_bow=normalize)


def train_epoch(
    contexts: Sequence[TrainingContext],
    config: LossConfig,
    params: EncoderParams,
    checkpoint_path=None,
) -> tuple[EncoderParams, TrainLog]:
    """One pass over the shuffled contexts; one Adam step per batch.

    Deterministic given (contexts, config, params): reruns produce identical
    loss series and bit-identical checkpoints.
    """
    config.validate()
    if not contexts:
        raise EmptyCorpus("no training contexts")
    if params.vocab is None:
        raise ValueError("params must carry a vocabulary")

    order = list(contexts)
    random.Random(f"{config.seed}:shuffle").shuffle(order)
    encoded = [_encode_context(ctx, params.vocab) for ctx in order]

    flat = params.flatten()
    state = AdamState(lr=config.lr)
    log = TrainLog()
    started = time.monotonic()
    step = 0
    for start in range(0, len(encoded), config.batch_size):
        batch = encoded[start : start + config.batch_size]
        grads = {name: np.zeros_like(arr) for name, arr in flat.items()}
        sums = {name: 0.0 for name in config.losses}
        view = params.with_values(flat)
        for enc in batch:
            example_losses = _apply_losses(enc, view, config, grads)
            for name, value in example_losses.items():
                sums[name] += value
        inv = 1.0 / len(batch)
        for arr in grads.values():
            arr *= inv
        step += 1
        elapsed = time.monotonic() - started
        total = 0.0
        for name in config.losses:
            mean = sums[name] * inv
            total += config.weight(name) * mean
            log.steps.append(TrainStepRecord(step=step, head=name, loss=mean, elapsed=elapsed))
        if not np.isfinite(total):
            raise NonFiniteLoss(f"non-finite loss at step {step}")
        flat, state = adam_step(flat, grads, state)

    result = params.with_values(flat)
    log.summaries = {
        "steps": step,
        "examples": len(encoded),
        "wall_seconds": time.monotonic() - started,
        "final_losses": {name: log.head_series(name)[-1] for name in config.losses},
    }
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, result)
        log.checkpoint_path = str(checkpoint_path)
    return result, log
