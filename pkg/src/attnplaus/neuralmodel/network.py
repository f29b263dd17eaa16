"""BiLSTM encoders joined by cross-attention, with exact gradients.

Both sentences go through the same embedding and BiLSTM parameters.
Each sentence attends over its hidden states using the opposite
sentence's embedding (final forward state ++ final backward state) as the
query.  The context vector and the sentence's own embedding are merged by
a tanh layer, the two merged vectors are concatenated and classified by
a one-hidden-layer ReLU MLP with a 3-way softmax.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..corpus import LABELS
from ..embeddings import EmbeddingTable, OovPolicy
from ..errors import DimensionError, EmptySentence, NumericError
from .lstm import LSTMWeights, run, run_backward

PAD, UNK = "<pad>", "<unk>"
TENSOR_NAMES = (
    "embedding",
    "fwd.Wx", "fwd.Wh", "fwd.b",
    "bwd.Wx", "bwd.Wh", "bwd.b",
    "merge.W", "merge.b",
    "mlp.W1", "mlp.b1", "mlp.W2", "mlp.b2",
)
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 64
    hidden: int = 64           # per direction; token states have width 2*hidden
    merge_dim: int | None = None   # default 2*hidden
    mlp_hidden: int | None = None  # default 2*hidden
    attention: str = "dot"     # "dot" | "cosine"
    seed: int = 0

    def __post_init__(self):
        if self.attention not in ("dot", "cosine"):
            raise ValueError(f"unknown attention score {self.attention!r}")
        if self.merge_dim is None:
            object.__setattr__(self, "merge_dim", 2 * self.hidden)
        if self.mlp_hidden is None:
            object.__setattr__(self, "mlp_hidden", 2 * self.hidden)


PRESETS = {
    "desk": ModelConfig(embed_dim=64, hidden=64),
    "full": ModelConfig(embed_dim=300, hidden=300),
}


class Vocab:
    def __init__(self, tokens):
        self.itos = list(tokens)
        if self.itos[:2] != [PAD, UNK]:
            raise ValueError("vocabulary must start with <pad>, <unk>")
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def build(cls, datasets, min_freq=1, max_size=None):
        freq = Counter()
        for d in datasets:
            for p in d:
                for tokens, _ in p.sides:
                    freq.update(t.normalized for t in tokens)
        words = sorted((w for w, n in freq.items() if n >= min_freq), key=lambda w: (-freq[w], w))
        if max_size:
            words = words[:max_size]
        return cls([PAD, UNK] + [w for w in words if w not in (PAD, UNK)])

    def __len__(self):
        return len(self.itos)

    def encode(self, tokens):
        ids = []
        for t in tokens:
            key = t if isinstance(t, str) else t.normalized
            ids.append(self.stoi.get(key, 1))
        return ids


@dataclass
class ModelParams:
    config: ModelConfig
    vocab: Vocab
    tensors: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self):
        return replace(self, tensors={k: v.copy() for k, v in self.tensors.items()})

    def lstm(self, direction) -> LSTMWeights:
        t = self.tensors
        return LSTMWeights(t[f"{direction}.Wx"], t[f"{direction}.Wh"], t[f"{direction}.b"])


def init_params(config: ModelConfig, vocab: Vocab, table: EmbeddingTable | None = None,
                oov_seed=None) -> ModelParams:
    """Random parameters; embedding rows come from ``table`` where available.

    Rows missing from the table (or all rows when ``table`` is None) are
    drawn from the seeded uniform(-0.05, 0.05) OOV policy; the padding
    row is zero.
    """
    rng = np.random.default_rng(config.seed)
    policy = OovPolicy.seeded_uniform(-0.05, 0.05, config.seed if oov_seed is None else oov_seed)
    if table is None:
        table = EmbeddingTable([], np.zeros((0, config.embed_dim)), policy)
    elif table.dim != config.embed_dim:
        raise DimensionError(f"embedding table has dim {table.dim}, config wants {config.embed_dim}")
    else:
        table = table.with_policy(policy)
    emb = np.stack([table.lookup(w) for w in vocab.itos])
    emb[0] = 0.0

    d_e, d_h, d_m, d_mlp = config.embed_dim, config.hidden, config.merge_dim, config.mlp_hidden

    def uniform(shape, bound):
        return rng.uniform(-bound, bound, size=shape)

    def xavier(fan_in, fan_out):
        return uniform((fan_in, fan_out), np.sqrt(6.0 / (fan_in + fan_out)))

    t = {"embedding": emb}
    k = 1.0 / np.sqrt(d_h)
    for direction in ("fwd", "bwd"):
        t[f"{direction}.Wx"] = uniform((d_e, 4 * d_h), k)
        t[f"{direction}.Wh"] = uniform((d_h, 4 * d_h), k)
        b = np.zeros(4 * d_h)
        b[d_h:2 * d_h] = 1.0  # forget gate
        t[f"{direction}.b"] = b
    t["merge.W"] = xavier(4 * d_h, d_m)
    t["merge.b"] = np.zeros(d_m)
    t["mlp.W1"] = xavier(2 * d_m, d_mlp)
    t["mlp.b1"] = np.zeros(d_mlp)
    t["mlp.W2"] = xavier(d_mlp, len(LABELS))
    t["mlp.b2"] = np.zeros(len(LABELS))
    return ModelParams(config, vocab, t)


# -- batching ---------------------------------------------------------------

@dataclass(frozen=True)
class Side:
    ids: np.ndarray      # (B, T) int, 0-padded
    lengths: np.ndarray  # (B,)

    @property
    def mask(self):
        return (np.arange(self.ids.shape[1])[None, :] < self.lengths[:, None]).astype(np.float64)

    @property
    def reverse_index(self):
        """Per-row index that reverses the real tokens and leaves padding in place."""
        T = self.ids.shape[1]
        t = np.arange(T)[None, :]
        L = self.lengths[:, None]
        return np.where(t < L, L - 1 - t, t)


@dataclass(frozen=True)
class Batch:
    premise: Side
    hypothesis: Side
    labels: np.ndarray
    pair_ids: tuple

    def __len__(self):
        return self.labels.size


def _side(seqs):
    if any(len(s) == 0 for s in seqs):
        raise EmptySentence("cannot encode an empty sentence")
    lengths = np.array([len(s) for s in seqs], dtype=np.intp)
    ids = np.zeros((len(seqs), lengths.max()), dtype=np.intp)
    for row, s in enumerate(seqs):
        ids[row, :len(s)] = s
    return Side(ids, lengths)


def make_batch(pairs, vocab: Vocab) -> Batch:
    pairs = list(pairs)
    return Batch(
        _side([vocab.encode(p.premise) for p in pairs]),
        _side([vocab.encode(p.hypothesis) for p in pairs]),
        np.array([LABEL_INDEX[p.label] for p in pairs], dtype=np.intp),
        tuple(p.pair_id for p in pairs),
    )


# -- forward ------------------------------------------------------------------

@dataclass(frozen=True)
class EncodedSentence:
    hiddens: np.ndarray    # (m, 2*d_h)
    embedding: np.ndarray  # (2*d_h,)


@dataclass(frozen=True)
class AttentionResult:
    alpha: np.ndarray
    context: np.ndarray


def _encode(params: ModelParams, side: Side):
    X = params["embedding"][side.ids]
    M = side.mask
    rev = side.reverse_index
    rows = np.arange(X.shape[0])[:, None]
    Hf, cache_f = run(params.lstm("fwd"), X, M)
    Hr, cache_b = run(params.lstm("bwd"), X[rows, rev], M)
    Hb = Hr[rows, rev]
    H = np.concatenate([Hf, Hb], axis=2)
    hbar = np.concatenate([Hf[:, -1], Hr[:, -1]], axis=1)
    return H, hbar, (cache_f, cache_b)


def _softmax_rows(scores, mask):
    s = np.where(mask > 0, scores, -np.inf)
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def _norms(v, axis=-1):
    return np.maximum(np.linalg.norm(v, axis=axis), 1e-12)


def _scores(H, q, method):
    dots = np.einsum("btd,bd->bt", H, q)
    if method == "dot":
        return dots
    return dots / (_norms(H) * _norms(q)[:, None])


def _attend(H, q, mask, method="dot"):
    alpha = _softmax_rows(_scores(H, q, method), mask)
    return alpha, np.einsum("bt,btd->bd", alpha, H)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(params: ModelParams, batch: Batch):
    method = params.config.attention
    Hp, hbp, cache_p = _encode(params, batch.premise)
    Hh, hbh, cache_h = _encode(params, batch.hypothesis)
    Mp, Mh = batch.premise.mask, batch.hypothesis.mask
    alpha_p, cp = _attend(Hp, hbh, Mp, method)
    alpha_h, ch = _attend(Hh, hbp, Mh, method)
    xp = np.concatenate([cp, hbp], axis=1)
    xh = np.concatenate([ch, hbh], axis=1)
    up = np.tanh(xp @ params["merge.W"] + params["merge.b"])
    uh = np.tanh(xh @ params["merge.W"] + params["merge.b"])
    z = np.concatenate([up, uh], axis=1)
    a1 = z @ params["mlp.W1"] + params["mlp.b1"]
    r = np.maximum(a1, 0.0)
    probs = _softmax(r @ params["mlp.W2"] + params["mlp.b2"])
    cache = dict(Hp=Hp, Hh=Hh, hbp=hbp, hbh=hbh, Mp=Mp, Mh=Mh, alpha_p=alpha_p,
                 alpha_h=alpha_h, xp=xp, xh=xh, up=up, uh=uh, z=z, a1=a1, r=r,
                 cache_p=cache_p, cache_h=cache_h)
    return probs, cache


def lengths_split(alpha, lengths):
    return [alpha[b, :n].copy() for b, n in enumerate(lengths)]


def predict(params: ModelParams, batch: Batch):
    """Class probabilities and per-sentence attention vectors for a batch."""
    probs, cache = _forward(params, batch)
    return (probs, lengths_split(cache["alpha_p"], batch.premise.lengths),
            lengths_split(cache["alpha_h"], batch.hypothesis.lengths))


def forward(params: ModelParams, pair):
    """``(class_probs, alpha_premise, alpha_hypothesis)`` for one pair."""
    probs, ap, ah = predict(params, make_batch([pair], params.vocab))
    return probs[0], ap[0], ah[0]


def encode(params: ModelParams, tokens) -> EncodedSentence:
    """BiLSTM states of one sentence given as Tokens, strings or ids."""
    tokens = list(tokens)
    if not tokens:
        raise EmptySentence("cannot encode an empty sentence")
    ids = tokens if isinstance(tokens[0], (int, np.integer)) else params.vocab.encode(tokens)
    H, hbar, _ = _encode(params, _side([ids]))
    return EncodedSentence(H[0], hbar[0])


def attend(h, h_opp, method="dot") -> AttentionResult:
    """Softmax attention of hidden states ``h`` (m, d) against query ``h_opp`` (d,)."""
    h = np.asarray(h, dtype=np.float64)
    q = np.asarray(h_opp, dtype=np.float64)
    if h.ndim != 2 or q.ndim != 1 or h.shape[1] != q.shape[0]:
        raise DimensionError(f"cannot attend states {h.shape} with query {q.shape}")
    alpha, c = _attend(h[None], q[None], np.ones((1, h.shape[0])), method)
    return AttentionResult(alpha[0], c[0])


def loss(class_probs, gold) -> float:
    """Cross-entropy of one prediction; ``gold`` is a label name or index."""
    idx = LABEL_INDEX[gold] if isinstance(gold, str) else int(gold)
    return float(-np.log(class_probs[idx]))


def batch_loss(params: ModelParams, batch: Batch) -> float:
    probs, _ = _forward(params, batch)
    picked = probs[np.arange(len(batch)), batch.labels]
    return float(-np.mean(np.log(picked)))


# -- backward -----------------------------------------------------------------

def _attend_backward(H, q, alpha, mask, dc, method):
    """Gradients of ``c = sum_t alpha_t H_t`` wrt H and q."""
    dalpha = np.einsum("bd,btd->bt", dc, H)
    dH = alpha[:, :, None] * dc[:, None, :]
    ds = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
    ds = ds * mask
    if method == "dot":
        dH += ds[:, :, None] * q[:, None, :]
        dq = np.einsum("bt,btd->bd", ds, H)
        return dH, dq
    nh = _norms(H)                 # (B, T)
    nq = _norms(q)[:, None]        # (B, 1)
    s = np.einsum("btd,bd->bt", H, q) / (nh * nq)
    g = ds / (nh * nq)
    dH += g[:, :, None] * q[:, None, :] - (ds * s / nh ** 2)[:, :, None] * H
    dq = np.einsum("bt,btd->bd", g, H) - np.sum(ds * s, axis=1)[:, None] * q / nq ** 2
    return dH, dq


def _encode_backward(params, side, caches, dH, dhbar, grads):
    d = params.config.hidden
    cache_f, cache_b = caches
    rev = side.reverse_index
    rows = np.arange(dH.shape[0])[:, None]
    dHf = dH[:, :, :d]
    dHr = dH[:, :, d:][rows, rev]
    dWx, dWh, db, dXf = run_backward(params.lstm("fwd"), cache_f, dHf, dhbar[:, :d])
    grads["fwd.Wx"] += dWx
    grads["fwd.Wh"] += dWh
    grads["fwd.b"] += db
    dWx, dWh, db, dXr = run_backward(params.lstm("bwd"), cache_b, dHr, dhbar[:, d:])
    grads["bwd.Wx"] += dWx
    grads["bwd.Wh"] += dWh
    grads["bwd.b"] += db
    dX = dXf + dXr[rows, rev]
    np.add.at(grads["embedding"], side.ids, dX)


def loss_and_gradients(params: ModelParams, batch: Batch):
    """Mean cross-entropy of ``batch`` and its exact gradient for every tensor."""
    method = params.config.attention
    probs, k = _forward(params, batch)
    B = len(batch)
    rows = np.arange(B)
    value = float(-np.mean(np.log(probs[rows, batch.labels])))

    grads = {name: np.zeros_like(v) for name, v in params.tensors.items()}
    dlogits = probs.copy()
    dlogits[rows, batch.labels] -= 1.0
    dlogits /= B
    grads["mlp.W2"] = k["r"].T @ dlogits
    grads["mlp.b2"] = dlogits.sum(axis=0)
    da1 = (dlogits @ params["mlp.W2"].T) * (k["a1"] > 0)
    grads["mlp.W1"] = k["z"].T @ da1
    grads["mlp.b1"] = da1.sum(axis=0)
    dz = da1 @ params["mlp.W1"].T
    dm = params.config.merge_dim
    dpre_p = dz[:, :dm] * (1.0 - k["up"] ** 2)
    dpre_h = dz[:, dm:] * (1.0 - k["uh"] ** 2)
    grads["merge.W"] = k["xp"].T @ dpre_p + k["xh"].T @ dpre_h
    grads["merge.b"] = dpre_p.sum(axis=0) + dpre_h.sum(axis=0)
    dxp = dpre_p @ params["merge.W"].T
    dxh = dpre_h @ params["merge.W"].T
    w = 2 * params.config.hidden
    dcp, dhbp = dxp[:, :w], dxp[:, w:].copy()
    dch, dhbh = dxh[:, :w], dxh[:, w:].copy()

    dHp, dq = _attend_backward(k["Hp"], k["hbh"], k["alpha_p"], k["Mp"], dcp, method)
    dhbh += dq
    dHh, dq = _attend_backward(k["Hh"], k["hbp"], k["alpha_h"], k["Mh"], dch, method)
    dhbp += dq

    _encode_backward(params, batch.premise, k["cache_p"], dHp, dhbp, grads)
    _encode_backward(params, batch.hypothesis, k["cache_h"], dHh, dhbh, grads)

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}", tensor=name)
    return value, grads


def gradients(params: ModelParams, batch: Batch) -> dict:
    return loss_and_gradients(params, batch)[1]


def config_dict(config: ModelConfig) -> dict:
    return asdict(config)
