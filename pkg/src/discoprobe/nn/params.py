"""Encoder parameter container and the binary checkpoint format.

Checkpoint layout: 8-byte magic "DSEVCKP1", one JSON header line (dims, vocab,
head inventory, seed, tensor order), then raw little-endian float32 blobs in
the header-declared order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

import numpy as np

from ..corpus import Vocab
from ..errors import UnreadableFile
from ..util import write_atomic
from .adam import ParamDict
from .feedforward import FeedForward, make_decoder_head
from .gru import GruParams, make_gru_params

MAGIC = b"DSEVCKP1"

GRU_FIELD_NAMES = tuple(f.name for f in fields(GruParams))

# Heads whose output layer scores the vocabulary (bag-of-words decoders).
VOCAB_HEADS = ("nsp_prev", "nsp_next", "sdt_section", "sdt_doc")


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    word_dim: int
    hidden_dim: int
    spp_caps: tuple[int, int] = (32, 64)
    nl_classes: int = 7
    head_hidden: int | None = None

    @property
    def sentence_dim(self) -> int:
        return 2 * self.hidden_dim

    @property
    def hidden_width(self) -> int:
        return self.head_hidden if self.head_hidden is not None else self.sentence_dim

    def head_out_dims(self) -> dict[str, int]:
        return {
            "nsp_prev": self.vocab_size,
            "nsp_next": self.vocab_size,
            "nl": self.nl_classes,
            "spp_sent": self.spp_caps[0],
            "spp_para": self.spp_caps[1],
            "sdt_section": self.vocab_size,
            "sdt_doc": self.vocab_size,
        }


@dataclass
class EncoderParams:
    config: EncoderConfig
    embedding: np.ndarray  # (V, word_dim)
    fwd: GruParams
    bwd: GruParams
    heads: dict[str, FeedForward]
    vocab: Vocab | None = None
    seed: int = 0

    @classmethod
    def init(cls, config: EncoderConfig, seed: int, vocab: Vocab | None = None, dtype=np.float32) -> "EncoderParams":
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(config.word_dim)
        embedding = rng.uniform(-bound, bound, size=(config.vocab_size, config.word_dim)).astype(dtype)
        fwd = make_gru_params(rng, config.word_dim, config.hidden_dim, dtype)
        bwd = make_gru_params(rng, config.word_dim, config.hidden_dim, dtype)
        heads = {
            name: make_decoder_head(rng, config.sentence_dim, out_dim, config.hidden_width, dtype)
            for name, out_dim in config.head_out_dims().items()
        }
        return cls(config=config, embedding=embedding, fwd=fwd, bwd=bwd, heads=heads, vocab=vocab, seed=seed)

    def flatten(self) -> ParamDict:
        flat: ParamDict = {"embedding": self.embedding}
        for prefix, gru in (("gru_fwd", self.fwd), ("gru_bwd", self.bwd)):
            for name in GRU_FIELD_NAMES:
                flat[f"{prefix}.{name}"] = getattr(gru, name)
        for head_name in sorted(self.heads):
            head = self.heads[head_name]
            for i, (w, b) in enumerate(zip(head.weights, head.biases)):
                flat[f"head.{head_name}.W{i}"] = w
                flat[f"head.{head_name}.b{i}"] = b
        return flat

    def zero_grads(self) -> ParamDict:
        return {name: np.zeros_like(arr) for name, arr in self.flatten().items()}

    def with_values(self, flat: ParamDict) -> "EncoderParams":
        """Rebuild the structured view over a flat parameter dict."""
        fwd = GruParams(**{n: flat[f"gru_fwd.{n}"] for n in GRU_FIELD_NAMES})
        bwd = GruParams(**{n: flat[f"gru_bwd.{n}"] for n in GRU_FIELD_NAMES})
        heads = {}
        for head_name, head in self.heads.items():
            heads[head_name] = FeedForward(
                weights=[flat[f"head.{head_name}.W{i}"] for i in range(len(head.weights))],
                biases=[flat[f"head.{head_name}.b{i}"] for i in range(len(head.biases))],
                activations=list(head.activations),
            )
        return EncoderParams(
            config=self.config,
            embedding=flat["embedding"],
            fwd=fwd,
            bwd=bwd,
            heads=heads,
            vocab=self.vocab,
            seed=self.seed,
        )

    def astype(self, dtype) -> "EncoderParams":
        return EncoderParams(
            config=self.config,
            embedding=self.embedding.astype(dtype),
            fwd=self.fwd.astype(dtype),
            bwd=self.bwd.astype(dtype),
            heads={n: h.astype(dtype) for n, h in self.heads.items()},
            vocab=self.vocab,
            seed=self.seed,
        )


def save_checkpoint(path, params: EncoderParams) -> None:
    flat = params.flatten()
    tensor_order = list(flat.keys())
    header = {
        "word_dim": params.config.word_dim,
        "hidden_dim": params.config.hidden_dim,
        "vocab_size": params.config.vocab_size,
        "spp_caps": list(params.config.spp_caps),
        "nl_classes": params.config.nl_classes,
        "head_hidden": params.config.head_hidden,
        "heads": sorted(params.heads),
        "seed": params.seed,
        "tensors": [[name, list(flat[name].shape)] for name in tensor_order],
        "vocab": params.vocab.index_to_token if params.vocab is not None else None,
    }
    blob = bytearray()
    blob += MAGIC
    blob += json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    blob += b"\n"
    for name in tensor_order:
        blob += np.ascontiguousarray(flat[name], dtype="<f4").tobytes()
    write_atomic(path, bytes(blob))


def load_checkpoint(path) -> EncoderParams:
    try:
        with open(path, "rb") as handle:
            magic = handle.read(len(MAGIC))
            if magic != MAGIC:
                raise UnreadableFile(path, f"bad magic {magic!r}")
            header_line = handle.readline()
            try:
                header = json.loads(header_line.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise UnreadableFile(path, f"bad header: {exc}") from None
            blob = handle.read()
    except OSError as exc:
        raise UnreadableFile(path, str(exc)) from None

    config = EncoderConfig(
        vocab_size=header["vocab_size"],
        word_dim=header["word_dim"],
        hidden_dim=header["hidden_dim"],
        spp_caps=tuple(header["spp_caps"]),
        nl_classes=header["nl_classes"],
        head_hidden=header["head_hidden"],
    )
    flat: ParamDict = {}
    offset = 0
    for name, shape in header["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise UnreadableFile(path, f"tensor {name} truncated")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
        flat[name] = arr.copy()  # writable
        offset += nbytes
    if offset != len(blob):
        raise UnreadableFile(path, f"{len(blob) - offset} trailing bytes")

    vocab = None
    if header.get("vocab") is not None:
        tokens = header["vocab"]
        vocab = Vocab(index_to_token=list(tokens), token_to_index={t: i for i, t in enumerate(tokens)})

    template = EncoderParams.init(config, seed=header.get("seed", 0), vocab=vocab)
    expected = template.flatten()
    if set(expected) != set(flat):
        raise UnreadableFile(path, "tensor inventory does not match declared heads/dims")
    for name, arr in expected.items():
        if flat[name].shape != arr.shape:
            raise UnreadableFile(path, f"tensor {name}: shape {flat[name].shape} != {arr.shape}")
    return template.with_values(flat)
