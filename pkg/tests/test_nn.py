import math

import numpy as np
import pytest

from discoprobe.errors import (
    DimMismatch,
    EmptySequence,
    EmptyTarget,
    IndexOutOfVocab,
    LabelOutOfRange,
    ShapeMismatch,
    UnreadableFile,
)
from discoprobe.corpus import Vocab
from discoprobe.nn import (
    AdamState,
    EncoderConfig,
    EncoderParams,
    adam_step,
    bigru_encode,
    bigru_encode_backward,
    bigru_encode_with_cache,
    bow_log_prob,
    feedforward_apply,
    grad_check,
    gru_cell,
    load_checkpoint,
    save_checkpoint,
    softmax,
    softmax_xent,
)
from discoprobe.nn.feedforward import feedforward_backward, feedforward_forward, make_decoder_head
from discoprobe.nn.gru import GruParams, make_gru_params
from discoprobe.nn.params import GRU_FIELD_NAMES


def zero_gru(h, d_in):
    z = lambda *s: np.zeros(s)
    return GruParams(
        W_z=z(h, d_in), W_r=z(h, d_in), W_h=z(h, d_in),
        U_z=z(h, h), U_r=z(h, h), U_h=z(h, h),
        b_z=z(h), b_r=z(h), b_h=z(h),
    )


# --- gru cell ---------------------------------------------------------------


def test_gru_cell_zero_params_halves_state():
    p = zero_gru(2, 3)
    h = np.array([0.4, -0.2])
    np.testing.assert_allclose(gru_cell(np.zeros(3), h, p), [0.2, -0.1])


def test_gru_cell_zero_state():
    p = zero_gru(2, 3)
    np.testing.assert_allclose(gru_cell(np.ones(3), np.zeros(2), p), np.zeros(2))


def test_gru_cell_stays_in_unit_box():
    rng = np.random.default_rng(0)
    p = make_gru_params(rng, 4, 5, dtype=np.float64)
    h = rng.uniform(-0.99, 0.99, size=5)
    for _ in range(50):
        h = gru_cell(rng.normal(size=4), h, p)
        assert np.all(np.abs(h) < 1.0)


def test_gru_cell_dim_mismatch():
    p = zero_gru(2, 3)
    with pytest.raises(DimMismatch):
        gru_cell(np.zeros(4), np.zeros(2), p)


# --- encoder ----------------------------------------------------------------


def _encoder(seed=9, vocab_size=12, word_dim=5, hidden=4, dtype=np.float64):
    config = EncoderConfig(vocab_size=vocab_size, word_dim=word_dim, hidden_dim=hidden)
    return EncoderParams.init(config, seed=seed).astype(dtype)


def test_bigru_zero_params_zero_output():
    params = _encoder()
    params.fwd = zero_gru(4, 5)
    params.bwd = zero_gru(4, 5)
    out = bigru_encode([1, 2, 3], params.embedding, params.fwd, params.bwd)
    np.testing.assert_allclose(out, np.zeros(8))


def test_bigru_single_token_symmetric():
    params = _encoder()
    out = bigru_encode([7], params.embedding, params.fwd, params.bwd)
    x = params.embedding[7]
    fwd = gru_cell(x, np.zeros(4), params.fwd)
    bwd = gru_cell(x, np.zeros(4), params.bwd)
    np.testing.assert_allclose(out, np.concatenate([fwd, bwd]), atol=1e-12)


def test_bigru_reversal_swaps_halves():
    # with both directions sharing weights the symmetry is exact
    params = _encoder()
    params.bwd = params.fwd.copy()
    ids = [1, 5, 3, 5, 9]
    fwd_then_bwd = bigru_encode(ids, params.embedding, params.fwd, params.bwd)
    reversed_out = bigru_encode(ids[::-1], params.embedding, params.fwd, params.bwd)
    swapped = np.concatenate([fwd_then_bwd[4:], fwd_then_bwd[:4]])
    np.testing.assert_allclose(reversed_out, swapped, atol=1e-12)


def test_bigru_permutation_sensitive():
    params = _encoder()
    a = bigru_encode([1, 2, 3, 4, 5], params.embedding, params.fwd, params.bwd)
    b = bigru_encode([3, 1, 5, 2, 4], params.embedding, params.fwd, params.bwd)
    assert np.max(np.abs(a - b)) > 1e-6


def test_bigru_empty_and_oov():
    params = _encoder()
    with pytest.raises(EmptySequence):
        bigru_encode([], params.embedding, params.fwd, params.bwd)
    with pytest.raises(IndexOutOfVocab):
        bigru_encode([99], params.embedding, params.fwd, params.bwd)


def test_bigru_gradient_matches_finite_differences():
    params = _encoder()
    ids = [1, 5, 3, 5]

    def loss_fn(flat):
        ep = params.with_values(flat)
        out, cache = bigru_encode_with_cache(ids, ep.embedding, ep.fwd, ep.bwd)
        loss = float(np.sum(out * out))
        grads = ep.zero_grads()
        d_fwd = GruParams(**{n: grads[f"gru_fwd.{n}"] for n in GRU_FIELD_NAMES})
        d_bwd = GruParams(**{n: grads[f"gru_bwd.{n}"] for n in GRU_FIELD_NAMES})
        bigru_encode_backward(2.0 * out, cache, ep.fwd, ep.bwd, grads["embedding"], d_fwd, d_bwd)
        return loss, grads

    err = grad_check(loss_fn, params.flatten(), max_coords_per_array=10)
    assert err < 1e-3


# --- feedforward ------------------------------------------------------------


def test_feedforward_zero_weights_returns_bias():
    rng = np.random.default_rng(1)
    head = make_decoder_head(rng, 4, 3, hidden=5, dtype=np.float64)
    for w in head.weights:
        w[:] = 0
    head.biases[-1][:] = [0.5, -0.5, 2.0]
    np.testing.assert_allclose(feedforward_apply(np.ones(4), head), [0.5, -0.5, 2.0])


def test_feedforward_dead_relu_passes_bias():
    rng = np.random.default_rng(2)
    head = make_decoder_head(rng, 4, 3, hidden=5, dtype=np.float64)
    head.biases[0][:] = -100.0  # first hidden layer all negative
    head.biases[-1][:] = [1.0, 2.0, 3.0]
    np.testing.assert_allclose(feedforward_apply(np.ones(4), head), [1.0, 2.0, 3.0])


def test_feedforward_jacobian():
    rng = np.random.default_rng(3)
    head = make_decoder_head(rng, 4, 3, hidden=5, dtype=np.float64)
    x = rng.normal(size=4)

    def loss_fn(flat):
        ff = head.copy()
        ff.weights = [flat[f"W{i}"] for i in range(3)]
        ff.biases = [flat[f"b{i}"] for i in range(3)]
        logits, cache = feedforward_forward(x, ff)
        loss = float(np.sum(np.tanh(logits)))
        d = 1.0 - np.tanh(logits) ** 2
        _, grads = feedforward_backward(d, cache, ff)
        return loss, {f"W{i}": g[0] for i, g in enumerate(grads)} | {f"b{i}": g[1] for i, g in enumerate(grads)}

    flat = {f"W{i}": w.copy() for i, w in enumerate(head.weights)}
    flat |= {f"b{i}": b.copy() for i, b in enumerate(head.biases)}
    assert grad_check(loss_fn, flat, max_coords_per_array=12) < 1e-3


def test_feedforward_batched_matches_single():
    rng = np.random.default_rng(4)
    head = make_decoder_head(rng, 4, 3, hidden=5, dtype=np.float64)
    xs = rng.normal(size=(6, 4))
    batched = feedforward_apply(xs, head)
    for i in range(6):
        np.testing.assert_allclose(batched[i], feedforward_apply(xs[i], head), atol=1e-12)


# --- softmax cross-entropy ----------------------------------------------------


def test_softmax_xent_uniform_18():
    loss, grad = softmax_xent(np.zeros(18), 0)
    assert loss == pytest.approx(math.log(18.0), abs=1e-6)
    assert math.isclose(loss, 2.8904, abs_tol=1e-4)


def test_softmax_xent_uniform_binary():
    loss, _ = softmax_xent(np.zeros(2), 0)
    assert loss == pytest.approx(0.6931, abs=1e-4)


def test_softmax_xent_large_logits_stable():
    loss, grad = softmax_xent(np.array([1000.0, 0.0]), 0)
    assert loss == pytest.approx(0.0, abs=1e-6)
    assert np.all(np.isfinite(grad))


def test_softmax_xent_label_range():
    with pytest.raises(LabelOutOfRange):
        softmax_xent(np.zeros(3), 3)


def test_softmax_sums_to_one():
    rng = np.random.default_rng(5)
    for _ in range(100):
        logits = rng.normal(scale=20, size=rng.integers(2, 9))
        assert abs(float(np.sum(softmax(logits))) - 1.0) < 1e-6
        loss, _ = softmax_xent(logits, 0)
        assert loss >= 0


# --- bag-of-words loss ---------------------------------------------------------


def test_bow_uniform_loss_is_log_vocab():
    rng = np.random.default_rng(6)
    head = make_decoder_head(rng, 4, 100, hidden=5, dtype=np.float64)
    for w in head.weights:
        w[:] = 0
    loss, _, _ = bow_log_prob(np.ones(4), [3, 50, 99], head)
    assert loss == pytest.approx(math.log(100.0), abs=1e-6)
    assert math.isclose(loss, 4.6052, abs_tol=1e-4)


def test_bow_unnormalized_scales_with_bag():
    rng = np.random.default_rng(6)
    head = make_decoder_head(rng, 4, 100, hidden=5, dtype=np.float64)
    for w in head.weights:
        w[:] = 0
    loss, _, _ = bow_log_prob(np.ones(4), [3, 50, 99], head, normalize=False)
    assert loss == pytest.approx(3 * math.log(100.0), abs=1e-6)


def test_bow_confident_target_loss_vanishes():
    rng = np.random.default_rng(7)
    head = make_decoder_head(rng, 4, 10, hidden=5, dtype=np.float64)
    for w in head.weights:
        w[:] = 0
    head.biases[-1][:] = -50.0
    head.biases[-1][4] = 50.0
    loss, _, _ = bow_log_prob(np.ones(4), [4], head)
    assert loss == pytest.approx(0.0, abs=1e-8)


def test_bow_empty_target():
    rng = np.random.default_rng(8)
    head = make_decoder_head(rng, 4, 10, hidden=5, dtype=np.float64)
    with pytest.raises(EmptyTarget):
        bow_log_prob(np.ones(4), [], head)


def test_bow_repeated_tokens_count():
    rng = np.random.default_rng(9)
    head = make_decoder_head(rng, 4, 10, hidden=5, dtype=np.float64)
    x = rng.normal(size=4)
    loss_rep, _, _ = bow_log_prob(x, [2, 2], head)
    loss_single, _, _ = bow_log_prob(x, [2], head)
    assert loss_rep == pytest.approx(loss_single, abs=1e-12)  # normalized: mean equals single
    loss_rep_u, _, _ = bow_log_prob(x, [2, 2], head, normalize=False)
    assert loss_rep_u == pytest.approx(2 * loss_single, rel=1e-12)


def test_bow_gradients():
    rng = np.random.default_rng(10)
    head = make_decoder_head(rng, 4, 20, hidden=6, dtype=np.float64)
    x = rng.normal(size=4)

    def loss_fn(flat):
        ff = head.copy()
        ff.weights = [flat[f"W{i}"] for i in range(3)]
        ff.biases = [flat[f"b{i}"] for i in range(3)]
        emb = flat["x"]
        loss, d_emb, grads = bow_log_prob(emb, [1, 5, 5, 19], ff)
        out = {f"W{i}": g[0] for i, g in enumerate(grads)}
        out |= {f"b{i}": g[1] for i, g in enumerate(grads)}
        out["x"] = d_emb
        return loss, out

    flat = {f"W{i}": w.copy() for i, w in enumerate(head.weights)}
    flat |= {f"b{i}": b.copy() for i, b in enumerate(head.biases)}
    flat["x"] = x.copy()
    assert grad_check(loss_fn, flat, max_coords_per_array=12) < 1e-3


# --- adam ----------------------------------------------------------------------


def test_adam_first_step_magnitude():
    params = {"w": np.array([1.0], dtype=np.float64)}
    grads = {"w": np.array([0.5], dtype=np.float64)}
    new, state = adam_step(params, grads, AdamState())
    assert new["w"][0] == pytest.approx(1.0 - 1e-3, abs=1e-8)
    assert state.t == 1


def test_adam_zero_gradient_identity():
    params = {"w": np.array([1.0, -2.0])}
    new, state = adam_step(params, {"w": np.zeros(2)}, AdamState())
    np.testing.assert_array_equal(new["w"], params["w"])
    assert state.t == 1
    # missing grads behave like zero gradients
    new2, state2 = adam_step(params, {}, AdamState())
    np.testing.assert_array_equal(new2["w"], params["w"])


def test_adam_pure():
    params = {"w": np.array([1.0])}
    grads = {"w": np.array([0.3])}
    state = AdamState()
    a1, s1 = adam_step(params, grads, state)
    a2, s2 = adam_step(params, grads, state)
    np.testing.assert_array_equal(a1["w"], a2["w"])
    np.testing.assert_array_equal(s1.m["w"], s2.m["w"])
    assert params["w"][0] == 1.0  # inputs untouched


def test_adam_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, AdamState())


# --- grad_check ------------------------------------------------------------------


def test_grad_check_quadratic_exact():
    def loss_fn(params):
        w = params["w"]
        return float(np.sum(w * w)), {"w": 2.0 * w}

    err = grad_check(loss_fn, {"w": np.array([1.0, -2.0])})
    assert err < 1e-8


def test_grad_check_skips_relu_kink():
    # d/dw relu(w) at w=0 is undefined; the checker must not flag it
    def loss_fn(params):
        w = params["w"]
        return float(np.sum(np.maximum(w, 0.0))), {"w": (w > 0).astype(float)}

    err = grad_check(loss_fn, {"w": np.array([0.0, 1.0, -1.0])})
    assert err < 1e-8


def test_grad_check_wrong_gradient_detected():
    def loss_fn(params):
        w = params["w"]
        return float(np.sum(w * w)), {"w": 3.0 * w}  # wrong on purpose

    err = grad_check(loss_fn, {"w": np.array([1.0, -2.0])})
    assert err > 0.1


# --- fuzz: no NaN/Inf in documented ranges ------------------------------------------


def test_fuzz_no_nonfinite():
    # 10^4 random cases across the op surface
    rng = np.random.default_rng(11)
    p = make_gru_params(rng, 6, 5, dtype=np.float64)
    for _ in range(2500):
        x = rng.uniform(-10, 10, size=6)
        h = rng.uniform(-1, 1, size=5)
        out = gru_cell(x, h, p)
        assert np.all(np.isfinite(out))
    for _ in range(2500):
        logits = rng.uniform(-1000, 1000, size=8)
        loss, grad = softmax_xent(logits, int(rng.integers(0, 8)))
        assert math.isfinite(loss) and np.all(np.isfinite(grad))
    head = make_decoder_head(rng, 5, 30, hidden=6, dtype=np.float64)
    for _ in range(2500):
        emb = rng.uniform(-10, 10, size=5)
        loss, d_emb, _ = bow_log_prob(emb, rng.integers(0, 30, size=4), head)
        assert math.isfinite(loss) and np.all(np.isfinite(d_emb))
    from discoprobe.nn.ops import sigmoid

    values = rng.uniform(-1e4, 1e4, size=2500)
    assert np.all(np.isfinite(sigmoid(values)))


# --- checkpoints -----------------------------------------------------------------


def _vocab(n):
    return Vocab.from_tokens(f"tok{i}" for i in range(n))


def test_checkpoint_roundtrip(tmp_path):
    vocab = _vocab(20)
    config = EncoderConfig(vocab_size=len(vocab), word_dim=6, hidden_dim=4, spp_caps=(8, 16))
    params = EncoderParams.init(config, seed=5, vocab=vocab)
    path = tmp_path / "enc.ckpt"
    save_checkpoint(path, params)
    loaded = load_checkpoint(path)
    assert loaded.config == config
    assert loaded.vocab.index_to_token == vocab.index_to_token
    for name, arr in params.flatten().items():
        np.testing.assert_array_equal(loaded.flatten()[name], arr)
    # identical bytes when saved again
    path2 = tmp_path / "enc2.ckpt"
    save_checkpoint(path2, loaded)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_magic_guard(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
    with pytest.raises(UnreadableFile):
        load_checkpoint(path)


def test_checkpoint_truncated(tmp_path):
    vocab = _vocab(10)
    config = EncoderConfig(vocab_size=len(vocab), word_dim=4, hidden_dim=3)
    params = EncoderParams.init(config, seed=5, vocab=vocab)
    path = tmp_path / "enc.ckpt"
    save_checkpoint(path, params)
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    with pytest.raises(UnreadableFile):
        load_checkpoint(path)
