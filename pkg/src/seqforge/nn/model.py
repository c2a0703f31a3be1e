"""The three-layer tagging network with exact manual gradients.

Layer 1 embeds each token as the concatenation of a learned token vector
and the final states of a character-level BiLSTM over its characters.
Layer 2 scores labels per position with a token-level BiLSTM followed by an
affine projection. Layer 3 is the linear-chain CRF in crf.py (or the
per-token softmax when the CRF is disabled). Everything runs in float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import Config
from ..embeddings import EmbeddingTable, Vocabulary, embedding_init_bound, normalize_token
from ..errors import ShapeMismatch
from . import crf as crf_ops
from .lstm import LstmCache, lstm_backward, lstm_forward


@dataclass(frozen=True)
class NetConfig:
    """Shape parameters of the network, resolved against a vocabulary."""

    n_tokens: int
    n_chars: int
    n_labels: int
    char_embedding_dimension: int
    char_lstm_dimension: int
    token_embedding_dimension: int
    token_lstm_dimension: int
    use_char_lstm: bool = True
    use_crf: bool = True

    @staticmethod
    def from_config(config: Config, vocab: Vocabulary) -> "NetConfig":
        return NetConfig(
            n_tokens=len(vocab.tokens),
            n_chars=len(vocab.chars),
            n_labels=vocab.n_labels,
            char_embedding_dimension=config.char_embedding_dimension,
            char_lstm_dimension=config.char_lstm_dimension,
            token_embedding_dimension=config.token_embedding_dimension,
            token_lstm_dimension=config.token_lstm_dimension,
            use_char_lstm=config.using_character_lstm,
            use_crf=config.using_crf,
        )

    @property
    def token_input_dim(self) -> int:
        extra = 2 * self.char_lstm_dimension if self.use_char_lstm else 0
        return self.token_embedding_dimension + extra


def tensor_shapes(cfg: NetConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor name -> shape map (also the checkpoint order)."""
    d_c, d_cl = cfg.char_embedding_dimension, cfg.char_lstm_dimension
    d_t, d_tl = cfg.token_embedding_dimension, cfg.token_lstm_dimension
    K = cfg.n_labels
    shapes: dict[str, tuple[int, ...]] = {}
    if cfg.use_char_lstm:
        shapes["char_embeddings"] = (cfg.n_chars, d_c)
        shapes["char_lstm_fwd_W"] = (4 * d_cl, d_c + d_cl)
        shapes["char_lstm_fwd_b"] = (4 * d_cl,)
        shapes["char_lstm_bwd_W"] = (4 * d_cl, d_c + d_cl)
        shapes["char_lstm_bwd_b"] = (4 * d_cl,)
    shapes["token_embeddings"] = (cfg.n_tokens, d_t)
    d_in = cfg.token_input_dim
    shapes["token_lstm_fwd_W"] = (4 * d_tl, d_in + d_tl)
    shapes["token_lstm_fwd_b"] = (4 * d_tl,)
    shapes["token_lstm_bwd_W"] = (4 * d_tl, d_in + d_tl)
    shapes["token_lstm_bwd_b"] = (4 * d_tl,)
    shapes["proj_W"] = (2 * d_tl, K)
    shapes["proj_b"] = (K,)
    shapes["transitions"] = (K + 2, K + 2)
    return shapes


@dataclass
class ModelParams:
    """All learnable tensors, keyed by canonical name."""

    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()})


@dataclass
class RowGrads:
    """Sparse gradient for an embedding matrix: only the touched rows."""

    shape: tuple[int, ...]
    rows: np.ndarray    # (n,) unique row indices
    values: np.ndarray  # (n, dim)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape)
        dense[self.rows] = self.values
        return dense


class _RowAccumulator:
    def __init__(self, shape):
        self.shape = shape
        self._acc: dict[int, np.ndarray] = {}

    def add(self, row: int, vec: np.ndarray):
        cur = self._acc.get(row)
        if cur is None:
            self._acc[row] = vec.copy()
        else:
            cur += vec

    def finalize(self) -> RowGrads:
        rows = np.asarray(sorted(self._acc), dtype=np.intp)
        values = (np.stack([self._acc[r] for r in rows])
                  if len(rows) else np.zeros((0, self.shape[1])))
        return RowGrads(shape=self.shape, rows=rows, values=values)


Gradients = dict  # name -> np.ndarray | RowGrads


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, shape)


def _lstm_bias(hidden: int) -> np.ndarray:
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0  # forget gate opens at init
    return b


def init_params(config: Config, vocab: Vocabulary,
                table: EmbeddingTable | None, seed: int) -> ModelParams:
    """Deterministically initialize every tensor from the seed.

    LSTM and projection weights are Glorot-uniform; LSTM forget biases are
    1 and all other biases 0. Token embedding rows are copied from the
    pretrained table where the token (or its normalized form) has a vector,
    and drawn uniform in +-sqrt(3/dim) otherwise. CRF transitions are small
    uniform values, or zeros when random_initial_transitions is off.
    """
    if table is not None and table.dimension != config.token_embedding_dimension:
        raise ShapeMismatch(
            f"pretrained dimension {table.dimension} != configured "
            f"token_embedding_dimension {config.token_embedding_dimension}")
    cfg = NetConfig.from_config(config, vocab)
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    d_cl, d_tl = cfg.char_lstm_dimension, cfg.token_lstm_dimension

    for name, shape in tensor_shapes(cfg).items():
        if name in ("char_embeddings", "token_embeddings"):
            bound = embedding_init_bound(shape[1])
            tensors[name] = rng.uniform(-bound, bound, shape)
        elif name.endswith("_W"):
            tensors[name] = _glorot(rng, shape)
        elif name.startswith("char_lstm") and name.endswith("_b"):
            tensors[name] = _lstm_bias(d_cl)
        elif name.startswith("token_lstm") and name.endswith("_b"):
            tensors[name] = _lstm_bias(d_tl)
        elif name == "proj_b":
            tensors[name] = np.zeros(shape)
        elif name == "transitions":
            if config.random_initial_transitions:
                tensors[name] = rng.uniform(-0.1, 0.1, shape)
            else:
                tensors[name] = np.zeros(shape)
        else:
            raise AssertionError(name)

    if table is not None:
        emb = tensors["token_embeddings"]
        for token, idx in vocab.token_index.items():
            vec = table.get(token)
            if vec is None:
                vec = table.get(normalize_token(token))
            if vec is not None:
                emb[idx] = vec
    return ModelParams(tensors)


@dataclass
class CharCache:
    char_ids: np.ndarray
    fwd: LstmCache
    bwd: LstmCache


@dataclass
class NetCache:
    """Intermediate activations for one sentence's forward pass, including
    the dropout masks so backward replays them exactly."""

    token_ids: np.ndarray
    char_caches: list[CharCache] | None
    inputs: np.ndarray            # (T, d_in) pre-dropout concatenation
    dropout_mask: np.ndarray | None
    fwd: LstmCache
    bwd: LstmCache
    hidden: np.ndarray            # (T, 2*d_tl)
    loss_cache: object = None     # CrfCache | SoftmaxCache, set by callers


def _char_encode(params: ModelParams, char_ids: np.ndarray) -> tuple[np.ndarray, CharCache]:
    xs = params["char_embeddings"][char_ids]
    hs_f, cache_f = lstm_forward(
        params["char_lstm_fwd_W"], params["char_lstm_fwd_b"], xs)
    hs_b, cache_b = lstm_forward(
        params["char_lstm_bwd_W"], params["char_lstm_bwd_b"], xs[::-1])
    vec = np.concatenate([hs_f[-1], hs_b[-1]])
    return vec, CharCache(char_ids=np.asarray(char_ids), fwd=cache_f, bwd=cache_b)


def char_encode(params: ModelParams, char_ids) -> np.ndarray:
    """Character BiLSTM encoding of one token: concatenation of the two
    directions' final hidden states."""
    vec, _ = _char_encode(params, np.asarray(char_ids, dtype=np.intp))
    return vec


def forward(params: ModelParams, cfg: NetConfig, token_ids, char_ids_list=None,
            dropout: float = 0.0, training: bool = False,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, NetCache]:
    """Emission scores (T, K) for one sentence plus the backward cache.

    Inverted dropout is applied to the concatenated per-token vectors only
    when `training` is true and the rate is positive; kept units are scaled
    by 1/(1-rate) so inference needs no rescaling.
    """
    token_ids = np.asarray(token_ids, dtype=np.intp)
    T = len(token_ids)
    if T == 0:
        raise ValueError("forward requires at least one token")

    rows = [params["token_embeddings"][token_ids[t]] for t in range(T)]
    char_caches = None
    if cfg.use_char_lstm:
        char_caches = []
        for t in range(T):
            vec, cache = _char_encode(
                params, np.asarray(char_ids_list[t], dtype=np.intp))
            char_caches.append(cache)
            rows[t] = np.concatenate([rows[t], vec])
    inputs = np.stack(rows)  # (T, d_in)

    mask = None
    dropped = inputs
    if training and dropout > 0.0:
        keep = (rng.random(inputs.shape) >= dropout)
        mask = keep / (1.0 - dropout)
        dropped = inputs * mask

    hs_f, cache_f = lstm_forward(
        params["token_lstm_fwd_W"], params["token_lstm_fwd_b"], dropped)
    hs_b_rev, cache_b = lstm_forward(
        params["token_lstm_bwd_W"], params["token_lstm_bwd_b"], dropped[::-1])
    hidden = np.concatenate([hs_f, hs_b_rev[::-1]], axis=1)  # (T, 2*d_tl)

    emissions = hidden @ params["proj_W"] + params["proj_b"]
    cache = NetCache(token_ids=token_ids, char_caches=char_caches,
                     inputs=inputs, dropout_mask=mask,
                     fwd=cache_f, bwd=cache_b, hidden=hidden)
    return emissions, cache


def backward(params: ModelParams, cfg: NetConfig, cache: NetCache,
             d_emissions: np.ndarray) -> Gradients:
    """Exact gradients of the scalar loss for every tensor, given the
    gradient w.r.t. the emission scores. Embedding gradients are sparse
    (only the rows this sentence touched)."""
    d_tl = cfg.token_lstm_dimension
    d_t = cfg.token_embedding_dimension

    grads: Gradients = {}
    grads["proj_W"] = cache.hidden.T @ d_emissions
    grads["proj_b"] = d_emissions.sum(axis=0)
    d_hidden = d_emissions @ params["proj_W"].T  # (T, 2*d_tl)

    dW_f, db_f, dx_f = lstm_backward(
        params["token_lstm_fwd_W"], cache.fwd, d_hidden[:, :d_tl])
    dW_b, db_b, dx_b_rev = lstm_backward(
        params["token_lstm_bwd_W"], cache.bwd, d_hidden[::-1, d_tl:])
    grads["token_lstm_fwd_W"], grads["token_lstm_fwd_b"] = dW_f, db_f
    grads["token_lstm_bwd_W"], grads["token_lstm_bwd_b"] = dW_b, db_b

    d_dropped = dx_f + dx_b_rev[::-1]
    d_inputs = (d_dropped * cache.dropout_mask
                if cache.dropout_mask is not None else d_dropped)

    token_acc = _RowAccumulator(params["token_embeddings"].shape)
    for t, idx in enumerate(cache.token_ids):
        token_acc.add(int(idx), d_inputs[t, :d_t])
    grads["token_embeddings"] = token_acc.finalize()

    if cfg.use_char_lstm:
        d_cl = cfg.char_lstm_dimension
        char_acc = _RowAccumulator(params["char_embeddings"].shape)
        gW_f = np.zeros_like(params["char_lstm_fwd_W"])
        gb_f = np.zeros_like(params["char_lstm_fwd_b"])
        gW_b = np.zeros_like(params["char_lstm_bwd_W"])
        gb_b = np.zeros_like(params["char_lstm_bwd_b"])
        for t, ccache in enumerate(cache.char_caches):
            L = len(ccache.char_ids)
            d_vec = d_inputs[t, d_t:]
            dhs_f = np.zeros((L, d_cl))
            dhs_f[-1] = d_vec[:d_cl]
            dhs_b = np.zeros((L, d_cl))
            dhs_b[-1] = d_vec[d_cl:]
            dWf, dbf, dxf = lstm_backward(
                params["char_lstm_fwd_W"], ccache.fwd, dhs_f)
            dWb, dbb, dxb_rev = lstm_backward(
                params["char_lstm_bwd_W"], ccache.bwd, dhs_b)
            gW_f += dWf
            gb_f += dbf
            gW_b += dWb
            gb_b += dbb
            dx = dxf + dxb_rev[::-1]
            for s, cid in enumerate(ccache.char_ids):
                char_acc.add(int(cid), dx[s])
        grads["char_lstm_fwd_W"], grads["char_lstm_fwd_b"] = gW_f, gb_f
        grads["char_lstm_bwd_W"], grads["char_lstm_bwd_b"] = gW_b, gb_b
        grads["char_embeddings"] = char_acc.finalize()
    return grads


def sentence_loss(params: ModelParams, cfg: NetConfig, token_ids,
                  char_ids_list, gold, dropout: float = 0.0,
                  training: bool = False,
                  rng: np.random.Generator | None = None
                  ) -> tuple[float, NetCache]:
    """Forward pass plus the configured loss (CRF NLL or summed softmax
    cross-entropy); the returned cache is ready for sentence_gradients."""
    emissions, cache = forward(params, cfg, token_ids, char_ids_list,
                               dropout=dropout, training=training, rng=rng)
    if cfg.use_crf:
        loss, loss_cache = crf_ops.crf_nll(
            emissions, params["transitions"], np.asarray(gold, dtype=np.intp))
    else:
        loss, loss_cache = crf_ops.softmax_nll(
            emissions, np.asarray(gold, dtype=np.intp))
    cache.loss_cache = loss_cache
    return loss, cache


def sentence_gradients(params: ModelParams, cfg: NetConfig,
                       cache: NetCache) -> Gradients:
    """Gradients of the cached sentence loss for every tensor (transitions
    gradient is zero when the CRF is disabled)."""
    if cfg.use_crf:
        d_emissions, d_transitions = crf_ops.crf_backward(cache.loss_cache)
    else:
        d_emissions = crf_ops.softmax_backward(cache.loss_cache)
        d_transitions = np.zeros_like(params["transitions"])
    grads = backward(params, cfg, cache, d_emissions)
    grads["transitions"] = d_transitions
    return grads


def decode(params: ModelParams, cfg: NetConfig, token_ids,
           char_ids_list=None) -> list[int]:
    """Most likely label indices for one sentence (Viterbi when the CRF is
    enabled, per-position argmax otherwise)."""
    emissions, _ = forward(params, cfg, token_ids, char_ids_list)
    if cfg.use_crf:
        labels, _ = crf_ops.viterbi_decode(emissions, params["transitions"])
        return labels
    return crf_ops.softmax_decode(emissions)


def global_grad_norm(grads: Gradients) -> float:
    total = 0.0
    for g in grads.values():
        values = g.values if isinstance(g, RowGrads) else g
        total += float(np.sum(values * values))
    return math.sqrt(total)


def sgd_step(params: ModelParams, grads: Gradients, learning_rate: float,
             clip_threshold: float = 0.0) -> ModelParams:
    """One gradient-descent update with global-norm clipping; embedding
    updates touch only the rows present in the sparse gradients."""
    scale = 1.0
    if clip_threshold > 0.0:
        norm = global_grad_norm(grads)
        if norm > clip_threshold:
            scale = clip_threshold / norm
    step = learning_rate * scale
    for name, g in grads.items():
        if isinstance(g, RowGrads):
            if len(g.rows):
                params.tensors[name][g.rows] -= step * g.values
        else:
            params.tensors[name] -= step * g
    return params
