import json

import numpy as np
import pytest

from discoprobe import fixtures
from discoprobe.corpus import build_vocab, context_windows


TINY_DOC = {
    "id": "doc1",
    "title": "A tiny article",
    "categories": ["cats", "history"],
    "sections": [
        {
            "title": "Intro",
            "level": 1,
            "paragraphs": [["The cat sat on the mat.", "It purred loudly."]],
        }
    ],
}


@pytest.fixture
def tiny_doc_line():
    return json.dumps(TINY_DOC)


@pytest.fixture(scope="session")
def small_docs():
    return fixtures.fixture_corpus(30, seed=13)


@pytest.fixture(scope="session")
def small_vocab(small_docs):
    return build_vocab(small_docs)


@pytest.fixture(scope="session")
def small_contexts(small_docs):
    return [ctx for doc in small_docs for ctx in context_windows(doc)]


def desk_params(vocab, hidden_dim=8, word_dim=8, spp_caps=(32, 64), seed=3, dtype=np.float32):
    from discoprobe.nn import EncoderConfig, EncoderParams

    config = EncoderConfig(
        vocab_size=len(vocab), word_dim=word_dim, hidden_dim=hidden_dim, spp_caps=spp_caps
    )
    params = EncoderParams.init(config, seed=seed, vocab=vocab)
    return params.astype(dtype) if dtype is not np.float32 else params
