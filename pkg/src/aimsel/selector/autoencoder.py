"""Sequence autoencoder in plain numpy.

Encoder: token embeddings -> bidirectional GRU; the embedding of a sequence
is the forward state at MSP joined with the backward state at MST, so both
halves have just read the mutated statement (sequences lacking the markers
use the final states).  Decoder: a GRU started from that embedding, fed the
previous target token (teacher forcing), with per-token sigmoid outputs over
the vocabulary trained by binary cross-entropy against the one-hot tokens.

Gradients are derived by hand (backpropagation through time) and checked
against finite differences in the test-suite.
"""
from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .sequences import BOS, MSP, MST, SelectorConfig, TokenSequence, Vocab

FORMAT = "aimsel-autoencoder"
FORMAT_VERSION = 1


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# -- GRU ---------------------------------------------------------------------

def gru_forward(X, mask, h0, W, U, b):
    """Run a GRU over X (T, B, D); padded steps (mask 0) keep the state."""
    T, B, _ = X.shape
    H = U.shape[0]
    A = (X.reshape(T * B, -1) @ W + b).reshape(T, B, 3 * H)
    hs = np.empty((T, B, H))
    cache = []
    h = h0
    for t in range(T):
        hu = h @ U
        z = _sigmoid(A[t, :, :H] + hu[:, :H])
        r = _sigmoid(A[t, :, H:2 * H] + hu[:, H:2 * H])
        n = np.tanh(A[t, :, 2 * H:] + r * hu[:, 2 * H:])
        m = mask[t][:, None]
        h_new = (1.0 - z) * n + z * h
        cache.append((h, z, r, n, hu[:, 2 * H:]))
        h = m * h_new + (1.0 - m) * h
        hs[t] = h
    return hs, cache


def gru_backward(dhs, X, mask, cache, W, U, dh_last=None):
    """Gradients of a GRU run given dL/dh_t for every step (T, B, H)."""
    T, B, D = X.shape
    H = U.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(3 * H)
    dA = np.empty((T, B, 3 * H))
    dh = np.zeros((B, H)) if dh_last is None else dh_last.copy()
    for t in range(T - 1, -1, -1):
        h, z, r, n, hu_n = cache[t]
        dh = dh + dhs[t]
        m = mask[t][:, None]
        dh_new = m * dh
        dn = dh_new * (1.0 - z)
        dz = dh_new * (h - n)
        dan = dn * (1.0 - n * n)
        daz = dz * z * (1.0 - z)
        dar = dan * hu_n * r * (1.0 - r)
        dA[t, :, :H] = daz
        dA[t, :, H:2 * H] = dar
        dA[t, :, 2 * H:] = dan
        dhu = np.concatenate([daz, dar, dan * r], axis=1)
        dU += h.T @ dhu
        dh = dh_new * z + dhu @ U.T + (1.0 - m) * dh
    flatA = dA.reshape(T * B, 3 * H)
    dW = X.reshape(T * B, D).T @ flatA
    db = flatA.sum(axis=0)
    dX = (flatA @ W.T).reshape(T, B, D)
    return dX, dW, dU, db, dh


# -- model -------------------------------------------------------------------

@dataclass
class AutoencoderModel:
    config: SelectorConfig
    vocab: Vocab
    params: Dict[str, np.ndarray]
    loss_history: List[float] = field(default_factory=list)

    @property
    def embedding_dim(self) -> int:
        return self.params["enc_f_U"].shape[0] * 2

    def save(self, path) -> None:
        header = {"format": FORMAT, "version": FORMAT_VERSION,
                  "config": asdict(self.config), "vocab": self.vocab.itos,
                  "loss_history": self.loss_history}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header)), **self.params)

    @classmethod
    def load(cls, path) -> "AutoencoderModel":
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != FORMAT or header.get("version") != FORMAT_VERSION:
                raise ValueError(f"{path}: not a version {FORMAT_VERSION} autoencoder file")
            params = {k: data[k] for k in data.files if k != "header"}
        vocab = Vocab(header["vocab"][2:])
        return cls(SelectorConfig(**header["config"]), vocab, params, header["loss_history"])


def init_params(vocab_size: int, config: SelectorConfig, rng) -> Dict[str, np.ndarray]:
    He = config.embedding_dim // 2
    Hd = config.embedding_dim
    D = config.token_dim

    def uni(shape, fan):
        k = 1.0 / np.sqrt(fan)
        return rng.uniform(-k, k, size=shape)

    return {
        "emb": rng.normal(0.0, 0.1, size=(vocab_size, D)),
        "enc_f_W": uni((D, 3 * He), He), "enc_f_U": uni((He, 3 * He), He),
        "enc_f_b": np.zeros(3 * He),
        "enc_b_W": uni((D, 3 * He), He), "enc_b_U": uni((He, 3 * He), He),
        "enc_b_b": np.zeros(3 * He),
        "dec_W": uni((D, 3 * Hd), Hd), "dec_U": uni((Hd, 3 * Hd), Hd),
        "dec_b": np.zeros(3 * Hd),
        "out_W": uni((Hd, vocab_size), Hd), "out_b": np.zeros(vocab_size),
    }


def _batch_arrays(ids: Sequence[Sequence[int]]):
    """Padded forward ids, per-sequence reversed ids, decoder inputs, mask."""
    T = max(len(s) for s in ids)
    B = len(ids)
    fwd = np.zeros((T, B), dtype=np.int64)
    rev = np.zeros((T, B), dtype=np.int64)
    dec_in = np.full((T, B), 1, dtype=np.int64)  # BOS
    mask = np.zeros((T, B))
    for j, s in enumerate(ids):
        L = len(s)
        fwd[:L, j] = s
        rev[:L, j] = s[::-1]
        dec_in[1:L, j] = s[:-1]
        mask[:L, j] = 1.0
    return fwd, rev, dec_in, mask


def _readout_positions(ids: Sequence[Sequence[int]], markers=None):
    """Steps at which the forward and backward encoder states are read.

    The forward state is taken at MSP (left context and statement seen) and
    the backward state at MST (right context, operator and statement seen).
    Sequences without both markers use the final states.
    """
    fpos = np.empty(len(ids), dtype=np.int64)
    bpos = np.empty(len(ids), dtype=np.int64)
    mst, msp = markers if markers else (None, None)
    for j, s in enumerate(ids):
        L = len(s)
        fpos[j] = bpos[j] = L - 1
        if mst in s and msp in s:
            fpos[j] = s.index(msp)
            bpos[j] = L - 1 - s.index(mst)
    return fpos, bpos


def _encode(params, fwd, rev, mask, fpos, bpos):
    emb = params["emb"]
    B = fwd.shape[1]
    He = params["enc_f_U"].shape[0]
    Xf, Xb = emb[fwd], emb[rev]
    hf, cf = gru_forward(Xf, mask, np.zeros((B, He)),
                         params["enc_f_W"], params["enc_f_U"], params["enc_f_b"])
    hb, cb = gru_forward(Xb, mask, np.zeros((B, He)),
                         params["enc_b_W"], params["enc_b_U"], params["enc_b_b"])
    cols = np.arange(B)
    z = np.concatenate([hf[fpos, cols], hb[bpos, cols]], axis=1)
    return z, (Xf, Xb, cf, cb)


def loss_and_grads(params, ids: Sequence[Sequence[int]], with_grads: bool = True,
                   markers=None):
    """Mean per-token reconstruction BCE (summed over vocabulary units)."""
    fpos, bpos = _readout_positions(ids, markers)
    fwd, rev, dec_in, mask = _batch_arrays(ids)
    T, B = fwd.shape
    V = params["emb"].shape[0]
    z, (Xf, Xb, cf, cb) = _encode(params, fwd, rev, mask, fpos, bpos)
    Xd = params["emb"][dec_in]
    S, cd = gru_forward(Xd, mask, z, params["dec_W"], params["dec_U"], params["dec_b"])
    logits = S @ params["out_W"] + params["out_b"]
    target = np.zeros((T, B, V))
    np.put_along_axis(target, fwd[:, :, None], 1.0, axis=2)
    n_tok = mask.sum()
    # numerically stable BCE with logits
    per = np.maximum(logits, 0) - logits * target + np.log1p(np.exp(-np.abs(logits)))
    loss = float((per.sum(axis=2) * mask).sum() / n_tok)
    if not with_grads:
        return loss, None
    g = {k: np.zeros_like(v) for k, v in params.items()}
    dlog = (_sigmoid(logits) - target) * (mask / n_tok)[:, :, None]
    Hd = S.shape[2]
    g["out_W"] = S.reshape(T * B, Hd).T @ dlog.reshape(T * B, V)
    g["out_b"] = dlog.sum(axis=(0, 1))
    dS = dlog @ params["out_W"].T
    dXd, g["dec_W"], g["dec_U"], g["dec_b"], dz = gru_backward(
        dS, Xd, mask, cd, params["dec_W"], params["dec_U"])
    He = params["enc_f_U"].shape[0]
    cols = np.arange(B)
    dhf = np.zeros((T, B, He))
    dhb = np.zeros((T, B, He))
    dhf[fpos, cols] = dz[:, :He]
    dhb[bpos, cols] = dz[:, He:]
    dXf, g["enc_f_W"], g["enc_f_U"], g["enc_f_b"], _ = gru_backward(
        dhf, Xf, mask, cf, params["enc_f_W"], params["enc_f_U"])
    dXb, g["enc_b_W"], g["enc_b_U"], g["enc_b_b"], _ = gru_backward(
        dhb, Xb, mask, cb, params["enc_b_W"], params["enc_b_U"])
    D = params["emb"].shape[1]
    demb = g["emb"]
    np.add.at(demb, fwd.ravel(), dXf.reshape(-1, D))
    np.add.at(demb, rev.ravel(), dXb.reshape(-1, D))
    np.add.at(demb, dec_in.ravel(), dXd.reshape(-1, D))
    return loss, g


class _Adam:
    def __init__(self, params, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _clip(grads, max_norm=5.0):
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm


def _markers(vocab: Vocab):
    return vocab.stoi.get(MST), vocab.stoi.get(MSP)


def train_autoencoder(sequences: Sequence[TokenSequence], config: SelectorConfig,
                      vocab: Optional[Vocab] = None) -> AutoencoderModel:
    """Seeded training; the vocabulary defaults to the training tokens."""
    if not sequences:
        raise ValueError("cannot train on an empty corpus")
    vocab = vocab or Vocab.build(sequences)
    rng = np.random.default_rng(config.seed)
    params = init_params(len(vocab), config, rng)
    ids = [vocab.encode(s.tokens) for s in sequences]
    opt = _Adam(params, config.learning_rate)
    history = []
    lengths = np.array([len(s) for s in ids])
    for _ in range(config.epochs):
        # batches of similar length (less padding), visited in random order
        order = np.lexsort((rng.permutation(len(ids)), lengths))
        batches = [order[i:i + config.batch_size] for i in range(0, len(order), config.batch_size)]
        total, count = 0.0, 0
        for b in rng.permutation(len(batches)):
            batch = [ids[j] for j in batches[b]]
            loss, grads = loss_and_grads(params, batch, markers=_markers(vocab))
            _clip(grads)
            opt.step(params, grads)
            n = sum(len(s) for s in batch)
            total += loss * n
            count += n
        history.append(total / count)
    return AutoencoderModel(config, vocab, params, history)


def embed_many(model: AutoencoderModel, seqs: Sequence[TokenSequence],
               batch_size: int = 64) -> np.ndarray:
    out = np.empty((len(seqs), model.embedding_dim))
    for i in range(0, len(seqs), batch_size):
        chunk = [model.vocab.encode(s.tokens) for s in seqs[i:i + batch_size]]
        fwd, rev, _, mask = _batch_arrays(chunk)
        pos = _readout_positions(chunk, _markers(model.vocab))
        out[i:i + len(chunk)] = _encode(model.params, fwd, rev, mask, *pos)[0]
    return out


def embed(model: AutoencoderModel, seq: TokenSequence) -> np.ndarray:
    return embed_many(model, [seq])[0]


def reconstruct(model: AutoencoderModel, seq: TokenSequence) -> List[str]:
    """Greedy decoding of ``seq`` from its embedding."""
    p = model.params
    ids = model.vocab.encode(seq.tokens)
    fwd, rev, _, mask = _batch_arrays([ids])
    h = _encode(p, fwd, rev, mask, *_readout_positions([ids], _markers(model.vocab)))[0]
    Hd = h.shape[1]
    prev = model.vocab.stoi[BOS]
    out = []
    for _ in range(len(ids)):
        x = p["emb"][prev][None, :]
        a = x @ p["dec_W"] + p["dec_b"]
        hu = h @ p["dec_U"]
        zg = _sigmoid(a[:, :Hd] + hu[:, :Hd])
        r = _sigmoid(a[:, Hd:2 * Hd] + hu[:, Hd:2 * Hd])
        n = np.tanh(a[:, 2 * Hd:] + r * hu[:, 2 * Hd:])
        h = (1 - zg) * n + zg * h
        prev = int(np.argmax(h @ p["out_W"] + p["out_b"]))
        out.append(model.vocab.itos[prev])
    return out


def reconstruction_accuracy(model: AutoencoderModel, seqs: Sequence[TokenSequence]) -> float:
    hits = total = 0
    for s in seqs:
        pred = reconstruct(model, s)
        hits += sum(a == b for a, b in zip(pred, s.tokens))
        total += len(s.tokens)
    return hits / total
