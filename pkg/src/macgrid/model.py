"""Grid scorer: toy encoder, CLN pair representations, sigmoid heads, BCE loss.

Everything is plain numpy in float64 with hand-written backward passes.
Shapes: n tokens, width d, K_s segment tags, K_e edge tags.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .codec import edge_targets, segment_targets
from .errors import ConfigError, InputError
from .types import EdgeTagTable, ProbGrid, SegmentTagTable, Sentence, TagAlphabet

UNK = "<unk>"


@dataclass
class TrainConfig:
    d: int = 32
    l_max: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    epochs: int = 100
    batch_size: int = 8
    seed: int = 42
    threshold: float = 0.5
    threshold_grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    ln_eps: float = 1e-5
    clamp: float = 1e-7
    init_scale: float = 0.1
    use_cln: bool = True
    use_inner_lstm: bool = True
    use_length_embedding: bool = True

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1 or self.l_max < 1:
            raise ConfigError("batch_size and l_max must be positive")
        self.threshold_grid = tuple(float(t) for t in self.threshold_grid)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["threshold_grid"] = list(self.threshold_grid)
        return out


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != UNK:
            object.__setattr__(self, "tokens", (UNK,) + tuple(t for t in self.tokens if t != UNK))
        object.__setattr__(self, "_index", {t: k for k, t in enumerate(self.tokens)})

    @classmethod
    def build(cls, sentences: Sequence[Sentence]) -> "Vocab":
        return cls((UNK,) + tuple(sorted({t for s in sentences for t in s.tokens})))

    def __len__(self) -> int:
        return len(self.tokens)

    def ids(self, sentence: Sentence) -> np.ndarray:
        index = self._index
        return np.array([index.get(t, 0) for t in sentence.tokens], dtype=np.int64)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# ---------------------------------------------------------------- parameters

def _lstm_shapes(prefix: str, din: int, d: int) -> dict:
    return {f"{prefix}_W": (4 * d, din + d), f"{prefix}_b": (4 * d,)}


def _pair_shapes(prefix: str, d: int, use_cln: bool) -> dict:
    if use_cln:
        return {f"{prefix}_Wa": (d, d), f"{prefix}_ba": (d,), f"{prefix}_Wb": (d, d), f"{prefix}_bb": (d,)}
    return {f"{prefix}_Wl": (d, d), f"{prefix}_Wr": (d, d), f"{prefix}_bc": (d,)}


def param_shapes(config: TrainConfig, vocab_size: int, alphabet: TagAlphabet) -> dict[str, tuple]:
    d = config.d
    shapes = {
        "tok_emb": (vocab_size, d),
        "pos_emb": (config.l_max, d),
        **_lstm_shapes("enc_fw", d, d),
        **_lstm_shapes("enc_bw", d, d),
        "seg_proj_W": (d, d), "seg_proj_b": (d,),
        "edge_proj_W": (d, d), "edge_proj_b": (d,),
        **_pair_shapes("seg_cln", d, config.use_cln),
        **_pair_shapes("edge_cln", d, config.use_cln),
    }
    if config.use_inner_lstm:
        shapes.update(_lstm_shapes("inner", d, d))
    if config.use_length_embedding:
        shapes["len_emb"] = (config.l_max, d)
    shapes.update({
        "seg_out_W": (alphabet.n_segment, d), "seg_out_b": (alphabet.n_segment,),
        "edge_out_W": (alphabet.n_edge, d), "edge_out_b": (alphabet.n_edge,),
    })
    return shapes


def _is_bias(name: str) -> bool:
    return name.endswith(("_b", "_ba", "_bb", "_bc"))


def init_params(config: TrainConfig, vocab_size: int, alphabet: TagAlphabet,
                rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform(-s, s) weights, zero biases, and b_alpha = 1 so CLN starts as plain LN."""
    params = {}
    for name, shape in param_shapes(config, vocab_size, alphabet).items():
        if name.endswith("_ba"):
            params[name] = np.ones(shape)
        elif _is_bias(name):
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.uniform(-config.init_scale, config.init_scale, size=shape)
    return params


# ---------------------------------------------------------------- building blocks

def lstm_step(W, b, x, h, c):
    """One batched LSTM step, gate order (input, forget, output, candidate)."""
    d = h.shape[1]
    xh = np.concatenate([x, h], axis=1)
    z = xh @ W.T + b
    i = sigmoid(z[:, :d])
    f = sigmoid(z[:, d:2 * d])
    o = sigmoid(z[:, 2 * d:3 * d])
    g = np.tanh(z[:, 3 * d:])
    c2 = f * c + i * g
    tc = np.tanh(c2)
    h2 = o * tc
    return h2, c2, (xh, i, f, o, g, c, tc)


def lstm_step_backward(W, cache, dh2, dc2):
    xh, i, f, o, g, c, tc = cache
    dc = dc2 + dh2 * o * (1.0 - tc * tc)
    dz = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * c * f * (1.0 - f),
        dh2 * tc * o * (1.0 - o),
        dc * i * (1.0 - g * g),
    ], axis=1)
    dxh = dz @ W
    din = xh.shape[1] - dh2.shape[1]
    return dxh[:, :din], dxh[:, din:], dc * f, dz.T @ xh, dz.sum(axis=0)


def run_lstm(W, b, xs):
    """Unbatched left-to-right sweep over xs (n, d_in); returns states (n, d) and caches."""
    d = b.shape[0] // 4
    h = np.zeros((1, d))
    c = np.zeros((1, d))
    out = np.empty((xs.shape[0], d))
    caches = []
    for t in range(xs.shape[0]):
        h, c, cache = lstm_step(W, b, xs[t:t + 1], h, c)
        out[t] = h[0]
        caches.append(cache)
    return out, caches


def run_lstm_backward(W, caches, dout):
    n, d = dout.shape
    dx = np.empty((n, caches[0][0].shape[1] - d))
    dW = np.zeros_like(W)
    db = np.zeros(W.shape[0])
    dh = np.zeros((1, d))
    dc = np.zeros((1, d))
    for t in range(n - 1, -1, -1):
        dxt, dh, dc, gW, gb = lstm_step_backward(W, caches[t], dout[t:t + 1] + dh, dc)
        dx[t] = dxt[0]
        dW += gW
        db += gb
    return dx, dW, db


def layer_norm(x, eps):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    sigma = np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    return xc / sigma, sigma


def layer_norm_backward(dxhat, xhat, sigma):
    return (dxhat - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)) / sigma


def cln(c, x, Wa, ba, Wb, bb, eps: float = 1e-5):
    """Conditional layer norm of x given condition c: (W_a c + b_a) * LN(x) + (W_b c + b_b)."""
    xhat, _ = layer_norm(np.asarray(x, dtype=np.float64), eps)
    c = np.asarray(c, dtype=np.float64)
    return (c @ Wa.T + ba) * xhat + (c @ Wb.T + bb)


def project(h, W, b):
    return h @ W.T + b


# ---------------------------------------------------------------- forward / backward

@dataclass
class PairCache:
    xhat: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray | None = None


@dataclass
class ForwardTrace:
    ids: np.ndarray
    x: np.ndarray
    h_fw: np.ndarray
    h_bw: np.ndarray
    h: np.ndarray
    hs: np.ndarray
    he: np.ndarray
    seg_pair: PairCache
    edge_pair: PairCache
    h_sb: np.ndarray
    h_in: np.ndarray
    e_len: np.ndarray
    h_seg: np.ndarray
    h_edge: np.ndarray
    seg_logits: np.ndarray
    edge_logits: np.ndarray
    seg_prob: np.ndarray
    edge_prob: np.ndarray
    caches: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.h.shape[0]


class MacModel:
    def __init__(self, config: TrainConfig, vocab: Vocab, alphabet: TagAlphabet,
                 params: dict[str, np.ndarray] | None = None, threshold: float | None = None):
        self.config = config
        self.vocab = vocab
        self.alphabet = alphabet
        if params is None:
            params = init_params(config, len(vocab), alphabet, np.random.default_rng(config.seed))
        expected = param_shapes(config, len(vocab), alphabet)
        if set(params) != set(expected):
            raise ConfigError(f"parameter names mismatch: {sorted(set(params) ^ set(expected))}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ConfigError(f"{name} has shape {params[name].shape}, expected {shape}")
        self.params = params
        self.threshold = config.threshold if threshold is None else threshold

    # -- token level

    def encode_tokens(self, sentence: Sentence):
        p = self.params
        n = len(sentence)
        if n > self.config.l_max:
            raise InputError(f"sentence {sentence.id!r} has {n} tokens, l_max is {self.config.l_max}")
        ids = self.vocab.ids(sentence)
        x = p["tok_emb"][ids] + p["pos_emb"][:n]
        h_fw, c_fw = run_lstm(p["enc_fw_W"], p["enc_fw_b"], x)
        h_bw_rev, c_bw = run_lstm(p["enc_bw_W"], p["enc_bw_b"], x[::-1])
        h_bw = h_bw_rev[::-1]
        return ids, x, h_fw, h_bw, h_fw + h_bw, {"enc_fw": c_fw, "enc_bw": c_bw}

    def _pair(self, prefix: str, v: np.ndarray):
        p = self.params
        eps = self.config.ln_eps
        if self.config.use_cln:
            xhat, sigma = layer_norm(v, eps)
            gamma = v @ p[f"{prefix}_Wa"].T + p[f"{prefix}_ba"]
            lam = v @ p[f"{prefix}_Wb"].T + p[f"{prefix}_bb"]
            out = gamma[:, None, :] * xhat[None, :, :] + lam[:, None, :]
            return out, PairCache(xhat, sigma, gamma)
        left = v @ p[f"{prefix}_Wl"].T
        right = v @ p[f"{prefix}_Wr"].T
        out = left[:, None, :] + right[None, :, :] + p[f"{prefix}_bc"]
        return out, PairCache(np.empty(0), np.empty(0))

    def _inner(self, hs: np.ndarray):
        """One left-to-right LSTM sweep per row i over hs[i:], batched across rows."""
        n, d = hs.shape
        W, b = self.params["inner_W"], self.params["inner_b"]
        h_in = np.zeros((n, n, d))
        h = np.zeros((n, d))
        c = np.zeros((n, d))
        caches = []
        for k in range(n):
            m = n - k
            h, c, cache = lstm_step(W, b, hs[k:], h[:m], c[:m])
            rows = np.arange(m)
            h_in[rows, rows + k] = h
            caches.append(cache)
        return h_in, caches

    def forward(self, sentence: Sentence) -> ForwardTrace:
        p = self.params
        cfg = self.config
        ids, x, h_fw, h_bw, h, caches = self.encode_tokens(sentence)
        n, d = h.shape
        hs = project(h, p["seg_proj_W"], p["seg_proj_b"])
        he = project(h, p["edge_proj_W"], p["edge_proj_b"])

        h_sb, seg_pair = self._pair("seg_cln", hs)
        if cfg.use_inner_lstm:
            h_in, caches["inner"] = self._inner(hs)
        else:
            h_in = np.zeros((n, n, d))
        upper = np.triu(np.ones((n, n), dtype=bool))
        if cfg.use_length_embedding:
            offset = np.arange(n)[None, :] - np.arange(n)[:, None]
            e_len = p["len_emb"][np.clip(offset, 0, None)] * upper[:, :, None]
        else:
            e_len = np.zeros((n, n, d))
        h_seg = h_sb + h_in + e_len
        seg_logits = h_seg @ p["seg_out_W"].T + p["seg_out_b"]
        seg_prob = sigmoid(seg_logits) * upper[:, :, None]

        h_edge, edge_pair = self._pair("edge_cln", he)
        edge_logits = h_edge @ p["edge_out_W"].T + p["edge_out_b"]
        edge_prob = sigmoid(edge_logits)
        return ForwardTrace(ids, x, h_fw, h_bw, h, hs, he, seg_pair, edge_pair, h_sb, h_in, e_len,
                            h_seg, h_edge, seg_logits, edge_logits, seg_prob, edge_prob, caches)

    def predict_grids(self, sentence: Sentence) -> tuple[ProbGrid, ProbGrid]:
        t = self.forward(sentence)
        return ProbGrid(t.seg_prob, "segment"), ProbGrid(t.edge_prob, "edge")

    # -- objective

    def targets(self, seg_table: SegmentTagTable, edge_table: EdgeTagTable):
        return segment_targets(seg_table, self.alphabet), edge_targets(edge_table, self.alphabet)

    def _bce(self, logits, prob, y, mask):
        """Clamped BCE, evaluated from the logits for accuracy.

        Clamping p to [delta, 1 - delta] is the same as clamping the logit to
        [-L, L] with L = log((1 - delta) / delta); log p = -softplus(-z).
        """
        delta = self.config.clamp
        bound = math.log((1.0 - delta) / delta)
        zc = np.clip(logits, -bound, bound)
        terms = y * np.logaddexp(0.0, -zc) + (1.0 - y) * np.logaddexp(0.0, zc)
        inside = (logits >= -bound) & (logits <= bound)
        # exact derivative of the clamped BCE w.r.t. the logit
        dz = np.where(inside, prob - y, 0.0) * mask
        return math.fsum((terms * mask).ravel()), dz

    def loss_terms(self, trace: ForwardTrace, seg_table: SegmentTagTable, edge_table: EdgeTagTable):
        ys, ye = self.targets(seg_table, edge_table)
        n = trace.n
        upper = np.triu(np.ones((n, n)))[:, :, None]
        ls, dzs = self._bce(trace.seg_logits, trace.seg_prob, ys, upper)
        le, dze = self._bce(trace.edge_logits, trace.edge_prob, ye, np.ones((n, n, 1)))
        return ls, le, dzs, dze

    def loss(self, trace: ForwardTrace, seg_table: SegmentTagTable, edge_table: EdgeTagTable) -> float:
        ls, le, _, _ = self.loss_terms(trace, seg_table, edge_table)
        return ls + le

    def _pair_backward(self, prefix: str, v, cache: PairCache, dout, grads) -> np.ndarray:
        p = self.params
        if self.config.use_cln:
            dgamma = np.einsum("ijd,jd->id", dout, cache.xhat)
            dlam = dout.sum(axis=1)
            dxhat = np.einsum("ijd,id->jd", dout, cache.gamma)
            grads[f"{prefix}_Wa"] += dgamma.T @ v
            grads[f"{prefix}_ba"] += dgamma.sum(axis=0)
            grads[f"{prefix}_Wb"] += dlam.T @ v
            grads[f"{prefix}_bb"] += dlam.sum(axis=0)
            dv = dgamma @ p[f"{prefix}_Wa"] + dlam @ p[f"{prefix}_Wb"]
            return dv + layer_norm_backward(dxhat, cache.xhat, cache.sigma)
        dleft = dout.sum(axis=1)
        dright = dout.sum(axis=0)
        grads[f"{prefix}_Wl"] += dleft.T @ v
        grads[f"{prefix}_Wr"] += dright.T @ v
        grads[f"{prefix}_bc"] += dleft.sum(axis=0)
        return dleft @ p[f"{prefix}_Wl"] + dright @ p[f"{prefix}_Wr"]

    def backward(self, trace: ForwardTrace, seg_table: SegmentTagTable, edge_table: EdgeTagTable):
        """Loss and exact gradients for every parameter (zeros where unused)."""
        p = self.params
        cfg = self.config
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        ls, le, dzs, dze = self.loss_terms(trace, seg_table, edge_table)
        n, d = trace.h.shape

        # classifier heads
        grads["seg_out_W"] += dzs.reshape(-1, dzs.shape[2]).T @ trace.h_seg.reshape(-1, d)
        grads["seg_out_b"] += dzs.sum(axis=(0, 1))
        dh_seg = dzs @ p["seg_out_W"]
        grads["edge_out_W"] += dze.reshape(-1, dze.shape[2]).T @ trace.h_edge.reshape(-1, d)
        grads["edge_out_b"] += dze.sum(axis=(0, 1))
        dh_edge = dze @ p["edge_out_W"]

        # segment pair representation
        dhs = self._pair_backward("seg_cln", trace.hs, trace.seg_pair, dh_seg, grads)
        if cfg.use_length_embedding:
            ii, jj = np.triu_indices(n)
            np.add.at(grads["len_emb"], jj - ii, dh_seg[ii, jj])
        if cfg.use_inner_lstm:
            W = p["inner_W"]
            dh_carry = np.zeros((n, d))
            dc_carry = np.zeros((n, d))
            caches = trace.caches["inner"]
            for k in range(n - 1, -1, -1):
                m = n - k
                rows = np.arange(m)
                dx, dh_prev, dc_prev, gW, gb = lstm_step_backward(
                    W, caches[k], dh_seg[rows, rows + k] + dh_carry[:m], dc_carry[:m])
                dhs[k:] += dx
                grads["inner_W"] += gW
                grads["inner_b"] += gb
                dh_carry[:m] = dh_prev
                dc_carry[:m] = dc_prev
                dh_carry[m:] = 0.0
                dc_carry[m:] = 0.0

        dhe = self._pair_backward("edge_cln", trace.he, trace.edge_pair, dh_edge, grads)

        # projections
        grads["seg_proj_W"] += dhs.T @ trace.h
        grads["seg_proj_b"] += dhs.sum(axis=0)
        grads["edge_proj_W"] += dhe.T @ trace.h
        grads["edge_proj_b"] += dhe.sum(axis=0)
        dh = dhs @ p["seg_proj_W"] + dhe @ p["edge_proj_W"]

        # encoder
        dx_fw, gW, gb = run_lstm_backward(p["enc_fw_W"], trace.caches["enc_fw"], dh)
        grads["enc_fw_W"] += gW
        grads["enc_fw_b"] += gb
        dx_bw_rev, gW, gb = run_lstm_backward(p["enc_bw_W"], trace.caches["enc_bw"], dh[::-1])
        grads["enc_bw_W"] += gW
        grads["enc_bw_b"] += gb
        dx = dx_fw + dx_bw_rev[::-1]
        np.add.at(grads["tok_emb"], trace.ids, dx)
        grads["pos_emb"][:n] += dx
        return ls + le, grads

    def loss_and_grads(self, sentence: Sentence, seg_table: SegmentTagTable, edge_table: EdgeTagTable):
        return self.backward(self.forward(sentence), seg_table, edge_table)


def segment_pair_repr(model: MacModel, trace: ForwardTrace, i: int, j: int) -> np.ndarray:
    if j < i:
        raise ValueError(f"segment representation needs i <= j, got ({i}, {j})")
    return trace.h_seg[i, j]


def edge_pair_repr(model: MacModel, trace: ForwardTrace, i: int, j: int) -> np.ndarray:
    return trace.h_edge[i, j]
