import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from macgrid.codec import encode
from macgrid.errors import ConfigError, InputError
from macgrid.gradcheck import gradient_check
from macgrid.model import (MacModel, TrainConfig, Vocab, cln, edge_pair_repr, init_params, layer_norm,
                           project, run_lstm, segment_pair_repr, sigmoid)
from macgrid.types import Entity, Sentence, tag_alphabet

SENT = Sentence("a b c d e f".split())
GOLD = [Entity.of("ADE", (0, 1), (4, 4)), Entity.of("POB", (2, 3)), Entity.of("ADE", (0, 0), (3, 3), (5, 5))]


def make_model(d=8, l_max=8, types=("ADE", "POB"), seed=0, jitter=0.3, vocab_extra=(), **flags):
    cfg = TrainConfig(d=d, l_max=l_max, **flags)
    alphabet = tag_alphabet(types)
    vocab = Vocab.build([SENT, Sentence(list(vocab_extra))] if vocab_extra else [SENT])
    rng = np.random.default_rng(seed)
    params = init_params(cfg, len(vocab), alphabet, rng)
    for k in params:
        params[k] = params[k] + rng.normal(0, jitter, params[k].shape) if jitter else params[k]
    return MacModel(cfg, vocab, alphabet, params)


# -- building blocks

def test_project_cases():
    h = np.array([[1.0, -2.0, 0.5]])
    assert np.array_equal(project(h, np.eye(3), np.zeros(3)), h)
    b = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(project(np.zeros((1, 3)), np.ones((3, 3)), b)[0], b)
    W = np.array([[1.0, 2, 3], [0, -1, 4], [2, 2, 2]])
    expect = [1 * 1 + 2 * -2 + 3 * 0.5 + 1, 0 + 2 + 2 + 1, 2 - 4 + 1 + 1]
    assert project(h, W, np.ones(3))[0].tolist() == expect


def test_cln_worked_example():
    out = cln(np.zeros(2), np.array([1.0, 3.0]), np.zeros((2, 2)), np.full(2, 2.0),
              np.zeros((2, 2)), np.full(2, 0.5), eps=0.0)
    assert out.tolist() == [-1.5, 2.5]


def test_cln_constant_input_gives_lambda():
    rng = np.random.default_rng(0)
    c = rng.normal(size=3)
    Wa, Wb, ba, bb = rng.normal(size=(3, 3)), rng.normal(size=(3, 3)), rng.normal(size=3), rng.normal(size=3)
    out = cln(c, np.full(3, 5.0), Wa, ba, Wb, bb)
    assert np.allclose(out, c @ Wb.T + bb, atol=1e-15)


def test_cln_identity_affine_is_layer_norm():
    rng = np.random.default_rng(1)
    for _ in range(20):
        c, x = rng.normal(size=6), rng.normal(size=6) * 3
        out = cln(c, x, np.zeros((6, 6)), np.ones(6), np.zeros((6, 6)), np.zeros(6))
        assert np.max(np.abs(out - layer_norm(x, 1e-5)[0])) < 1e-12


@settings(max_examples=50)
@given(arrays(np.float64, st.integers(2, 16), elements=st.floats(-100, 100)))
def test_layer_norm_moments(x):
    xhat, sigma = layer_norm(x, 1e-5)
    assert abs(xhat.mean()) < 1e-10
    assert sigma.item() >= math.sqrt(1e-5) - 1e-15
    if x.var() > 1.0:
        assert abs(xhat.std() - 1.0) < 1e-5


@settings(max_examples=50)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_sigmoid_order_follows_logits(a, b):
    pa, pb = sigmoid(np.float64(a)), sigmoid(np.float64(b))
    assert (pa < pb) == (a < b) or abs(a - b) < 1e-12


# -- encoder

def test_encode_tokens_deterministic_and_shaped():
    m = make_model()
    one = m.encode_tokens(Sentence(["a"]))
    assert one[2].shape == one[3].shape == (1, 8)
    a, b = m.encode_tokens(SENT), m.encode_tokens(SENT)
    assert np.array_equal(a[4], b[4])


def test_unknown_tokens_map_to_unk():
    m = make_model()
    assert m.vocab.ids(Sentence(["a", "zzz"])).tolist() == [m.vocab.tokens.index("a"), 0]


@pytest.mark.parametrize("k", [0, 2, 5])
def test_perturbation_respects_recurrence_direction(k):
    m = make_model()
    _, _, fw0, bw0, h0, _ = m.encode_tokens(SENT)
    m.params["pos_emb"][k, 3] += 0.5
    _, _, fw1, bw1, h1, _ = m.encode_tokens(SENT)
    changed_fw = np.any(fw0 != fw1, axis=1)
    changed_bw = np.any(bw0 != bw1, axis=1)
    assert changed_fw.tolist() == [t >= k for t in range(6)]
    assert changed_bw.tolist() == [t <= k for t in range(6)]
    assert np.array_equal(h1, fw1 + bw1)


def test_sentence_longer_than_l_max():
    m = make_model(l_max=5)
    with pytest.raises(InputError):
        m.forward(SENT)
    m.forward(Sentence(list("abcde")))  # n = l_max uses the last length embedding row


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(d=1)
    with pytest.raises(ConfigError):
        TrainConfig(lr=0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)


# -- pair representations and heads

def test_inner_row_sweep_matches_per_pair_recompute():
    m = make_model()
    t = m.forward(SENT)
    W, b = m.params["inner_W"], m.params["inner_b"]
    for i in range(6):
        for j in range(i, 6):
            hs, _ = run_lstm(W, b, t.hs[i:j + 1])
            assert np.allclose(t.h_in[i, j], hs[-1], rtol=0, atol=1e-14)


def test_segment_pair_composition():
    m = make_model()
    t = m.forward(SENT)
    for i, j in [(0, 0), (1, 4), (5, 5)]:
        sb = cln(t.hs[i], t.hs[j], m.params["seg_cln_Wa"], m.params["seg_cln_ba"],
                 m.params["seg_cln_Wb"], m.params["seg_cln_bb"])
        expect = sb + t.h_in[i, j] + m.params["len_emb"][j - i]
        assert np.allclose(segment_pair_repr(m, t, i, j), expect, rtol=0, atol=1e-13)
    with pytest.raises(ValueError):
        segment_pair_repr(m, t, 3, 2)


def test_edge_pair_asymmetric_and_identity_reduction():
    m = make_model()
    t = m.forward(SENT)
    assert not np.allclose(edge_pair_repr(m, t, 1, 4), edge_pair_repr(m, t, 4, 1))
    assert np.all(np.isfinite(edge_pair_repr(m, t, 2, 2)))
    m.params["edge_cln_Wa"][:] = 0
    m.params["edge_cln_ba"][:] = 1
    m.params["edge_cln_Wb"][:] = 0
    m.params["edge_cln_bb"][:] = 0
    t = m.forward(SENT)
    ln = layer_norm(t.he, 1e-5)[0]
    for i in range(6):
        assert np.allclose(t.h_edge[i], ln, rtol=0, atol=1e-12)


def test_zero_weights_give_half():
    m = make_model(jitter=0)
    for k in m.params:
        m.params[k][:] = 0
    seg, edge = m.predict_grids(SENT)
    upper = np.triu(np.ones((6, 6), dtype=bool))
    assert np.all(seg.values[upper] == 0.5)
    assert np.all(seg.values[~upper] == 0.0)
    assert np.all(edge.values == 0.5)


@pytest.mark.parametrize("seed", range(3))
def test_probabilities_open_interval(seed):
    m = make_model(seed=seed)
    t = m.forward(SENT)
    upper = np.triu(np.ones((6, 6), dtype=bool))
    for p in (t.seg_prob[upper], t.edge_prob):
        assert np.all(np.isfinite(p)) and np.all((p > 0) & (p < 1))


# -- objective

def _half_model(types=("ADE",)):
    m = make_model(types=types, jitter=0)
    for k in m.params:
        m.params[k][:] = 0
    return m


def test_loss_fixture_counts():
    m = _half_model()
    s = Sentence(["a", "b"])
    ls, le, _, _ = m.loss_terms(m.forward(s), *encode(s, []))
    assert abs(ls - 9 * math.log(2)) < 1e-12
    assert abs(le - 8 * math.log(2)) < 1e-12
    ls2, le2, _, _ = m.loss_terms(m.forward(s), *encode(s, [Entity.of("ADE", (0, 0), (1, 1))]))
    assert (ls2, le2) == (ls, le)  # p = 0.5 makes each term ln 2 whatever the label


def test_flipping_one_bit():
    m = make_model(types=("ADE", "POB"))
    s = SENT
    seg0, edge0 = encode(s, [])
    seg1, edge1 = encode(s, [Entity.of("POB", (2, 3))])
    t = m.forward(s)
    k = m.alphabet.segment_index(next(iter(seg1.get(2, 3))))
    p = t.seg_prob[2, 3, k]
    diff = m.loss(t, seg1, edge1) - m.loss(t, seg0, edge0)
    assert abs(diff - (-math.log(p) + math.log(1 - p))) < 1e-12


def test_perfect_prediction_near_zero():
    m = make_model()
    t = m.forward(SENT)
    seg, edge = encode(SENT, GOLD)
    ys, ye = m.targets(seg, edge)
    # p = y before clamping: logits at +-infinity
    perfect = dataclasses.replace(t, seg_prob=ys, edge_prob=ye,
                                  seg_logits=np.where(ys > 0, np.inf, -np.inf),
                                  edge_logits=np.where(ye > 0, np.inf, -np.inf))
    J = m.loss(perfect, seg, edge)
    cells = 21 * m.alphabet.n_segment + 36 * m.alphabet.n_edge
    assert 0 <= J <= cells * 1.1e-7


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_loss_non_negative(seed):
    m = make_model(seed=seed, jitter=1.0)
    assert m.loss(m.forward(SENT), *encode(SENT, GOLD)) >= 0


def test_bias_gradient_is_probability_sum():
    m = make_model(jitter=0)
    seg, edge = encode(SENT, [])
    t = m.forward(SENT)
    _, g = m.backward(t, seg, edge)
    upper = np.triu(np.ones((6, 6), dtype=bool))
    assert np.allclose(g["seg_out_b"], t.seg_prob[upper].sum(axis=0), rtol=0, atol=1e-12)
    assert np.allclose(g["edge_out_b"], t.edge_prob.sum(axis=(0, 1)), rtol=0, atol=1e-12)


def test_unused_rows_get_zero_gradient():
    m = make_model(l_max=10, vocab_extra=("x", "y"))
    _, g = m.loss_and_grads(SENT, *encode(SENT, GOLD))
    for tok in ("x", "y", "<unk>"):
        assert not g["tok_emb"][m.vocab.tokens.index(tok)].any()
    assert not g["pos_emb"][6:].any()
    assert not g["len_emb"][6:].any()
    assert g["tok_emb"][m.vocab.tokens.index("a")].any()
    assert set(g) == set(m.params)


@pytest.mark.parametrize("flags", [
    {},
    {"use_cln": False},
    {"use_inner_lstm": False},
    {"use_length_embedding": False},
])
def test_finite_difference_gradients(flags):
    # d=8, n=6, two types. Entries below the round-off floor of the step-1e-4
    # difference (see gradcheck) are judged on absolute error instead.
    m = make_model(d=8, l_max=6, seed=3, **flags)
    worst = gradient_check(m, SENT, *encode(SENT, GOLD), floor=None)
    assert set(worst) == set(m.params)
    assert max(worst.values()) < 1e-4, worst
