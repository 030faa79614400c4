"""The three modal predictors.

* Transformer encoder over padded SMILES token ids (sinusoidal position
  table, stacked self-attention layers, masked mean pooling).
* BiGRU over the 1024-bit fingerprint reshaped into 64 chunks of 16
  bits, with forward/backward hidden sequences combined linearly and a
  multi-head attention layer on top.
* Two-layer graph convolution over atom features propagated through the
  normalized adjacency, mean-pooled over atoms.

Each head ends in the same fully connected block (relu hidden layer,
scalar output) and exposes its pooled penultimate vector alongside the
prediction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .chemlex import EncodedSeq
from .ecfp import Fingerprint
from .numcore import (
    AdamState,
    Rng,
    Tensor,
    adam_step,
    concat,
    dropout,
    embedding,
    layer_norm,
    matmul,
    mean,
    mean_pool_rows,
    no_grad,
    positional_encoding,
    relu,
    sigmoid,
    softmax,
    sum_,
    tanh,
    transpose,
)

__all__ = [
    "ModelConfig",
    "TrainConfig",
    "TrainReport",
    "SeqBatch",
    "FpBatch",
    "GraphBatch",
    "fp_to_chunks",
    "MultiHeadAttention",
    "mha",
    "TransformerHead",
    "BiGruHead",
    "GcnHead",
    "transformer_forward",
    "bigru_forward",
    "gcn_forward",
    "train_head",
    "mse_loss",
    "NonFiniteLossError",
]

_NEG_LARGE = -1e30  # additive mask value; exp() underflows to exactly 0.0


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass
class ModelConfig:
    d_model: int = 128
    n_heads: int = 4
    d_k: int = 32
    n_layers: int = 2
    ff_mult: int = 4
    gru_input: int = 64
    gru_hidden: int = 128
    gru_layers: int = 2
    gcn_hidden1: int = 156
    gcn_hidden2: int = 312
    fc_hidden: int = 64
    dropout: float = 0.1


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 200
    patience: int = 20
    lr: float = 1e-3


class ParamSet:
    """Named, ordered trainable tensors; the unit of checkpointing."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(values, requires_grad=True)
        self._params[name] = t
        return t

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        if missing:
            raise KeyError(f"missing parameters {sorted(missing)}")
        for name, t in self._params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {t.data.shape}")
            t.data = arr.copy()


# ---------------------------------------------------------------------------
# modal input batches


@dataclass
class SeqBatch:
    """Padded token ids (n, max_len) with per-row true lengths."""

    ids: np.ndarray
    lengths: np.ndarray

    @classmethod
    def from_encoded(cls, seqs: list[EncodedSeq]) -> "SeqBatch":
        return cls(
            ids=np.stack([s.ids for s in seqs]),
            lengths=np.array([s.true_len for s in seqs], dtype=np.int64),
        )

    def __len__(self):
        return self.ids.shape[0]

    def take(self, idx) -> "SeqBatch":
        return SeqBatch(self.ids[idx], self.lengths[idx])


@dataclass
class FpBatch:
    """Fingerprints as chunk sequences (n, n_chunks, chunk_bits)."""

    chunks: np.ndarray

    @classmethod
    def from_fingerprints(cls, fps: list[Fingerprint]) -> "FpBatch":
        return cls(chunks=np.stack([fp_to_chunks(fp) for fp in fps]))

    def __len__(self):
        return self.chunks.shape[0]

    def take(self, idx) -> "FpBatch":
        return FpBatch(self.chunks[idx])


@dataclass
class GraphBatch:
    """Per-molecule (atom features, normalized adjacency) pairs."""

    graphs: list[tuple[np.ndarray, np.ndarray]]

    def __len__(self):
        return len(self.graphs)

    def take(self, idx) -> "GraphBatch":
        return GraphBatch([self.graphs[int(i)] for i in np.atleast_1d(idx)])


def fp_to_chunks(fp: Fingerprint, chunk_bits: int = 16) -> np.ndarray:
    """Reshape the bit vector into (nbits / chunk_bits) rows of 0/1 floats."""
    if fp.nbits % chunk_bits:
        raise ValueError(f"{fp.nbits} bits do not split into {chunk_bits}-bit chunks")
    return fp.bits.astype(np.float64).reshape(-1, chunk_bits)


# ---------------------------------------------------------------------------
# attention


class MultiHeadAttention:
    """Scaled dot-product attention with per-head projections."""

    def __init__(self, params: ParamSet, prefix: str, d: int, n_heads: int, d_k: int, rng: Rng):
        if n_heads * d_k != d:
            raise ValueError(f"n_heads*d_k must equal d: {n_heads}*{d_k} != {d}")
        self.n_heads = n_heads
        self.scale = 1.0 / np.sqrt(d_k)
        self.w_q, self.w_k, self.w_v = [], [], []
        for h in range(n_heads):
            self.w_q.append(params.add(f"{prefix}q{h}", rng.init_uniform((d, d_k), d)))
            self.w_k.append(params.add(f"{prefix}k{h}", rng.init_uniform((d, d_k), d)))
            self.w_v.append(params.add(f"{prefix}v{h}", rng.init_uniform((d, d_k), d)))
        self.w_o = params.add(f"{prefix}o", rng.init_uniform((d, d), d))

    def __call__(
        self,
        h: Tensor,
        mask_add: Tensor | None = None,
        rng: Rng | None = None,
        drop: float = 0.0,
        training: bool = False,
    ) -> Tensor:
        heads = []
        for i in range(self.n_heads):
            q = matmul(h, self.w_q[i])
            k = matmul(h, self.w_k[i])
            v = matmul(h, self.w_v[i])
            scores = matmul(q, transpose(k)) * self.scale
            if mask_add is not None:
                scores = scores + mask_add
            attn = softmax(scores, axis=-1)
            if training and drop > 0.0:
                attn = dropout(attn, drop, rng, training)
            heads.append(matmul(attn, v))
        return matmul(concat(heads, axis=-1), self.w_o)


def mha(h: Tensor | np.ndarray, params: MultiHeadAttention, mask_add=None) -> Tensor:
    """Single evaluation of multi-head attention (no dropout)."""
    h = h if isinstance(h, Tensor) else Tensor(h)
    if mask_add is not None and not isinstance(mask_add, Tensor):
        mask_add = Tensor(mask_add)
    return params(h, mask_add)


def _key_padding_mask(lengths: np.ndarray, max_len: int) -> Tensor:
    """(n, 1, max_len) additive mask: 0 on real keys, -1e30 on padding."""
    cols = np.arange(max_len)[None, :]
    blocked = cols >= lengths[:, None]
    return Tensor(np.where(blocked, _NEG_LARGE, 0.0)[:, None, :])


class _FcHead:
    """Shared output block: relu hidden layer with dropout, then a scalar."""

    def __init__(self, params: ParamSet, prefix: str, d_in: int, d_hidden: int, rng: Rng):
        self.w_h = params.add(f"{prefix}fc_w", rng.init_uniform((d_in, d_hidden), d_in))
        self.b_h = params.add(f"{prefix}fc_b", np.zeros(d_hidden))
        self.w_o = params.add(f"{prefix}out_w", rng.init_uniform((d_hidden, 1), d_hidden))
        self.b_o = params.add(f"{prefix}out_b", np.zeros(1))

    def __call__(self, pooled: Tensor, rng, drop: float, training: bool) -> Tensor:
        hidden = relu(matmul(pooled, self.w_h) + self.b_h)
        if training and drop > 0.0:
            hidden = dropout(hidden, drop, rng, training)
        return matmul(hidden, self.w_o) + self.b_o


# ---------------------------------------------------------------------------
# transformer head


class TransformerHead:
    """Token embedding + position table + stacked encoder layers + pooling."""

    name_prefix = "tf."

    def __init__(self, vocab_size: int, max_len: int, cfg: ModelConfig, rng: Rng):
        self.cfg = cfg
        self.max_len = max_len
        self.params = ParamSet()
        d = cfg.d_model
        emb = rng.init_uniform((vocab_size + 1, d), d)
        emb[0] = 0.0  # padding row
        self.emb = self.params.add("emb", emb)
        self.pe = positional_encoding(max_len, d)
        self.layers = []
        for i in range(cfg.n_layers):
            pre = f"layer{i}."
            attn = MultiHeadAttention(self.params, pre + "attn.", d, cfg.n_heads, cfg.d_k, rng)
            block = {
                "attn": attn,
                "ln1_g": self.params.add(pre + "ln1_g", np.ones(d)),
                "ln1_b": self.params.add(pre + "ln1_b", np.zeros(d)),
                "ff_w1": self.params.add(pre + "ff_w1", rng.init_uniform((d, cfg.ff_mult * d), d)),
                "ff_b1": self.params.add(pre + "ff_b1", np.zeros(cfg.ff_mult * d)),
                "ff_w2": self.params.add(
                    pre + "ff_w2", rng.init_uniform((cfg.ff_mult * d, d), cfg.ff_mult * d)
                ),
                "ff_b2": self.params.add(pre + "ff_b2", np.zeros(d)),
                "ln2_g": self.params.add(pre + "ln2_g", np.ones(d)),
                "ln2_b": self.params.add(pre + "ln2_b", np.zeros(d)),
            }
            self.layers.append(block)
        self.fc = _FcHead(self.params, "", d, cfg.fc_hidden, rng)

    def _encode(self, batch: SeqBatch, rng, training: bool) -> tuple[Tensor, Tensor]:
        # Trimming to the batch's longest row is exact: masked keys get
        # weight exp(-1e30) == 0 and padding rows never enter the pool.
        lmax = max(1, int(batch.lengths.max()))
        ids = batch.ids[:, :lmax]
        lengths = batch.lengths
        x = embedding(self.emb, ids) + self.pe[:lmax]
        mask_add = _key_padding_mask(lengths, lmax)
        drop = self.cfg.dropout
        for block in self.layers:
            attended = block["attn"](x, mask_add, rng, drop, training)
            x = layer_norm(x + attended, block["ln1_g"], block["ln1_b"])
            ff = matmul(relu(matmul(x, block["ff_w1"]) + block["ff_b1"]), block["ff_w2"])
            x = layer_norm(x + ff + block["ff_b2"], block["ln2_g"], block["ln2_b"])
        keep = Tensor((np.arange(lmax)[None, :] < lengths[:, None])[..., None].astype(float))
        pooled = sum_(x * keep, axis=1) * Tensor(1.0 / lengths[:, None])
        return pooled, self.fc(pooled, rng, drop, training)

    def forward_batch(self, batch: SeqBatch, rng=None, training: bool = False):
        pooled, out = self._encode(batch, rng, training)
        return out.reshape(len(batch)), pooled

    def predict(self, batch: SeqBatch, batch_size: int = 256):
        return _predict_in_slices(self, batch, batch_size)

    def loss(self, batch: SeqBatch, y: np.ndarray, rng, training: bool = True) -> Tensor:
        pred, _ = self.forward_batch(batch, rng, training)
        return mse_loss(pred, y)


# ---------------------------------------------------------------------------
# BiGRU head


class _GruCell:
    """Update/reset-gate cell: z and r share one gate projection."""

    def __init__(self, params: ParamSet, prefix: str, d_in: int, d_hidden: int, rng: Rng):
        self.d_hidden = d_hidden
        self.w_zr = params.add(f"{prefix}w_zr", rng.init_uniform((d_in, 2 * d_hidden), d_in))
        self.u_zr = params.add(f"{prefix}u_zr", rng.init_uniform((d_hidden, 2 * d_hidden), d_hidden))
        self.b_zr = params.add(f"{prefix}b_zr", np.zeros(2 * d_hidden))
        self.w_c = params.add(f"{prefix}w_c", rng.init_uniform((d_in, d_hidden), d_in))
        self.u_c = params.add(f"{prefix}u_c", rng.init_uniform((d_hidden, d_hidden), d_hidden))
        self.b_c = params.add(f"{prefix}b_c", np.zeros(d_hidden))

    def step_projected(self, x_zr: Tensor, x_c: Tensor, h: Tensor) -> Tensor:
        """One recurrence step given precomputed input projections.

        x_zr = x @ w_zr + b_zr and x_c = x @ w_c + b_c are hoisted out of
        the time loop by the caller; only the hidden-state projections
        stay inside the recurrence.
        """
        gates = sigmoid(x_zr + matmul(h, self.u_zr))
        z = gates[:, : self.d_hidden]
        r = gates[:, self.d_hidden :]
        cand = tanh(x_c + matmul(r * h, self.u_c))
        return h + z * (cand - h)

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        return self.step_projected(
            matmul(x, self.w_zr) + self.b_zr, matmul(x, self.w_c) + self.b_c, h
        )


class BiGruHead:
    """Stacked bidirectional GRU over fingerprint chunks, then attention."""

    name_prefix = "gru."

    def __init__(self, cfg: ModelConfig, rng: Rng, chunk_bits: int = 16):
        self.cfg = cfg
        self.params = ParamSet()
        gh = cfg.gru_hidden
        self.w_in = self.params.add("chunk_w", rng.init_uniform((chunk_bits, cfg.gru_input), chunk_bits))
        self.b_in = self.params.add("chunk_b", np.zeros(cfg.gru_input))
        self.layers = []
        d_in = cfg.gru_input
        for i in range(cfg.gru_layers):
            pre = f"layer{i}."
            self.layers.append(
                {
                    "fwd": _GruCell(self.params, pre + "fwd.", d_in, gh, rng),
                    "bwd": _GruCell(self.params, pre + "bwd.", d_in, gh, rng),
                    "comb_f": self.params.add(pre + "comb_f", rng.init_uniform((gh, gh), gh)),
                    "comb_b": self.params.add(pre + "comb_b", rng.init_uniform((gh, gh), gh)),
                }
            )
            d_in = gh
        n_heads = cfg.n_heads
        d_k = gh // n_heads
        self.attn = MultiHeadAttention(self.params, "attn.", gh, n_heads, d_k, rng)
        self.fc = _FcHead(self.params, "", gh, cfg.fc_hidden, rng)

    def _run_layer(self, xs: Tensor, layer, n: int, steps: int) -> Tensor:
        gh = self.cfg.gru_hidden
        fwd, bwd = layer["fwd"], layer["bwd"]
        f_zr = matmul(xs, fwd.w_zr) + fwd.b_zr
        f_c = matmul(xs, fwd.w_c) + fwd.b_c
        b_zr = matmul(xs, bwd.w_zr) + bwd.b_zr
        b_c = matmul(xs, bwd.w_c) + bwd.b_c
        h = Tensor(np.zeros((n, gh)))
        forward_states = []
        for t in range(steps):
            h = fwd.step_projected(f_zr[:, t, :], f_c[:, t, :], h)
            forward_states.append(h)
        h = Tensor(np.zeros((n, gh)))
        backward_states: list[Tensor | None] = [None] * steps
        for t in range(steps - 1, -1, -1):
            h = bwd.step_projected(b_zr[:, t, :], b_c[:, t, :], h)
            backward_states[t] = h
        combined = [
            (matmul(forward_states[t], layer["comb_f"]) + matmul(backward_states[t], layer["comb_b"])).reshape(
                (n, 1, gh)
            )
            for t in range(steps)
        ]
        return concat(combined, axis=1)

    def _encode(self, batch: FpBatch, rng, training: bool) -> tuple[Tensor, Tensor]:
        n, steps, _ = batch.chunks.shape
        xs = matmul(Tensor(batch.chunks), self.w_in) + self.b_in
        for layer in self.layers:
            xs = self._run_layer(xs, layer, n, steps)
        drop = self.cfg.dropout
        attended = self.attn(xs, None, rng, drop, training)
        pooled = mean_pool_rows(attended)
        return pooled, self.fc(pooled, rng, drop, training)

    def forward_batch(self, batch: FpBatch, rng=None, training: bool = False):
        pooled, out = self._encode(batch, rng, training)
        return out.reshape(len(batch)), pooled

    def predict(self, batch: FpBatch, batch_size: int = 256):
        return _predict_in_slices(self, batch, batch_size)

    def loss(self, batch: FpBatch, y: np.ndarray, rng, training: bool = True) -> Tensor:
        pred, _ = self.forward_batch(batch, rng, training)
        return mse_loss(pred, y)


# ---------------------------------------------------------------------------
# GCN head


class GcnHead:
    """Two normalized-adjacency convolutions, mean pool, FC block."""

    name_prefix = "gcn."

    def __init__(self, cfg: ModelConfig, rng: Rng, n_features: int = 78):
        self.cfg = cfg
        self.params = ParamSet()
        self.w0 = self.params.add("conv0_w", rng.init_uniform((n_features, cfg.gcn_hidden1), n_features))
        self.w1 = self.params.add("conv1_w", rng.init_uniform((cfg.gcn_hidden1, cfg.gcn_hidden2), cfg.gcn_hidden1))
        self.fc = _FcHead(self.params, "", cfg.gcn_hidden2, cfg.fc_hidden, rng)

    def forward_one(self, x: np.ndarray, a_hat: np.ndarray, rng=None, training: bool = False):
        xt, at = Tensor(x), Tensor(a_hat)
        h1 = relu(matmul(at, matmul(xt, self.w0)))
        h2 = relu(matmul(at, matmul(h1, self.w1)))
        pooled = mean_pool_rows(h2).reshape((1, self.cfg.gcn_hidden2))
        out = self.fc(pooled, rng, self.cfg.dropout, training)
        return out.reshape(1), pooled.reshape(self.cfg.gcn_hidden2)

    def forward_batch(self, batch: GraphBatch, rng=None, training: bool = False):
        preds, hiddens = [], []
        for x, a_hat in batch.graphs:
            p, h = self.forward_one(x, a_hat, rng, training)
            preds.append(p)
            hiddens.append(h.reshape((1, self.cfg.gcn_hidden2)))
        return concat(preds, axis=0), concat(hiddens, axis=0)

    def predict(self, batch: GraphBatch, batch_size: int = 256):
        return _predict_in_slices(self, batch, batch_size)

    def loss(self, batch: GraphBatch, y: np.ndarray, rng, training: bool = True) -> Tensor:
        pred, _ = self.forward_batch(batch, rng, training)
        return mse_loss(pred, y)


# ---------------------------------------------------------------------------
# spec-level single-input entry points


def transformer_forward(seq: EncodedSeq, head: TransformerHead) -> tuple[float, np.ndarray]:
    preds, hidden = head.predict(SeqBatch.from_encoded([seq]))
    return float(preds[0]), hidden[0]


def bigru_forward(fp: Fingerprint, head: BiGruHead) -> tuple[float, np.ndarray]:
    preds, hidden = head.predict(FpBatch.from_fingerprints([fp]))
    return float(preds[0]), hidden[0]


def gcn_forward(x: np.ndarray, a_hat: np.ndarray, head: GcnHead) -> tuple[float, np.ndarray]:
    if x.shape[0] != a_hat.shape[0]:
        raise ValueError(f"feature rows {x.shape[0]} != adjacency dimension {a_hat.shape[0]}")
    with no_grad():
        pred, hidden = head.forward_one(x, a_hat)
    return float(pred.data[0]), hidden.data


def _predict_in_slices(head, batch, batch_size: int):
    preds, hiddens = [], []
    with no_grad():
        for start in range(0, len(batch), batch_size):
            sl = batch.take(np.arange(start, min(start + batch_size, len(batch))))
            p, h = head.forward_batch(sl, rng=None, training=False)
            preds.append(p.data)
            hiddens.append(h.data)
    return np.concatenate(preds), np.concatenate(hiddens)


# ---------------------------------------------------------------------------
# training


def mse_loss(pred: Tensor, y: np.ndarray) -> Tensor:
    diff = pred - Tensor(np.asarray(y, dtype=np.float64))
    return mean(diff * diff)


@dataclass
class TrainReport:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    wall_time: float = 0.0


def train_head(head, train_data, y_train, val_data, y_val, cfg: TrainConfig, rng: Rng):
    """Minibatch MSE training with Adam and best-validation snapshotting.

    The head is updated in place and left holding the parameters of its
    best validation epoch; returns (head, TrainReport).
    """
    t0 = time.perf_counter()
    report = TrainReport()
    y_train = np.asarray(y_train, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if cfg.epochs <= 0:
        report.wall_time = time.perf_counter() - t0
        return head, report

    state = AdamState(lr=cfg.lr)
    params = head.params.tensors()
    best_state = head.params.state_dict()
    stale = 0
    n = len(y_train)
    for epoch in range(cfg.epochs):
        order = rng.shuffle_indices(n)
        epoch_loss = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            head.params.zero_grad()
            loss = head.loss(train_data.take(idx), y_train[idx], rng, training=True)
            value = loss.item()
            if not np.isfinite(value):
                raise NonFiniteLossError(f"non-finite training loss at epoch {epoch} batch {b}")
            loss.backward()
            adam_step(params, None, state)
            epoch_loss += value * len(idx)
        report.train_losses.append(epoch_loss / n)

        val_pred, _ = head.predict(val_data)
        val_loss = float(np.mean((val_pred - y_val) ** 2))
        if not np.isfinite(val_loss):
            raise NonFiniteLossError(f"non-finite validation loss at epoch {epoch}")
        report.val_losses.append(val_loss)
        if val_loss < report.best_val_loss:
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best_state = head.params.state_dict()
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break

    head.params.load_state_dict(best_state)
    report.wall_time = time.perf_counter() - t0
    return head, report
