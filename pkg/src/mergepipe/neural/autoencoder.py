"""Sequence autoencoder: LSTM encoder to a K-dim embedding, LSTM decoder back.

The encoder reads the full sequence and maps its final hidden state to the
embedding through a linear head.  The decoder receives the embedding as its
initial state (two linear maps, one per state half), consumes a zero input
at every step, and a per-step linear readout reconstructs the sequence.
Training minimizes the mean Euclidean distance between each sequence and
its reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import BadConfig, NonFiniteLoss, ShapeMismatch
from .network import AdamState, NetworkParams, TrainConfig, _init_dense, _init_lstm, _LayoutBuilder


@dataclass(frozen=True)
class AutoencoderSpec:
    sequence_length: int = 121
    embedding_dim: int = 5
    hidden_width: int = 5
    activation: str = "sigmoid"  # candidate/cell-output transform of both LSTMs
    seed: int = 0

    def __post_init__(self):
        if self.embedding_dim < 1 or self.hidden_width < 1:
            raise BadConfig("embedding_dim and hidden_width must be >= 1")
        if not self.embedding_dim < self.sequence_length:
            raise BadConfig("embedding_dim must be smaller than sequence_length")
        if self.activation not in ("sigmoid", "tanh"):
            raise BadConfig("autoencoder activation must be sigmoid or tanh")

    def to_json(self) -> dict:
        return {
            "sequence_length": self.sequence_length,
            "embedding_dim": self.embedding_dim,
            "hidden_width": self.hidden_width,
            "activation": self.activation,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AutoencoderSpec":
        return cls(**doc)


class SequenceAutoencoder:
    def __init__(self, spec: AutoencoderSpec):
        self.spec = spec
        h = spec.hidden_width
        k = spec.embedding_dim
        builder = _LayoutBuilder()
        builder.add("enc.wx", (1, 4 * h))
        builder.add("enc.wh", (h, 4 * h))
        builder.add("enc.b", (4 * h,))
        builder.add("embed.w", (h, k))
        builder.add("embed.b", (k,))
        builder.add("dec_h0.w", (k, h))
        builder.add("dec_h0.b", (h,))
        builder.add("dec_c0.w", (k, h))
        builder.add("dec_c0.b", (h,))
        builder.add("dec.wx", (1, 4 * h))
        builder.add("dec.wh", (h, 4 * h))
        builder.add("dec.b", (4 * h,))
        builder.add("out.w", (h, 1))
        builder.add("out.b", (1,))
        self._builder = builder

    def init_params(self, rng) -> NetworkParams:
        params = self._builder.allocate(self.spec.seed)
        h = self.spec.hidden_width
        k = self.spec.embedding_dim
        _init_lstm(params, rng, "enc", 1, h)
        _init_dense(params, rng, "embed", h, k, "none")
        _init_dense(params, rng, "dec_h0", k, h, "none")
        _init_dense(params, rng, "dec_c0", k, h, "none")
        _init_lstm(params, rng, "dec", 1, h)
        _init_dense(params, rng, "out", h, 1, "none")
        return params

    def _check(self, sequences) -> np.ndarray:
        x = np.asarray(sequences, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.sequence_length:
            raise ShapeMismatch(
                f"expected (n, {self.spec.sequence_length}) sequences, got {x.shape}"
            )
        return x

    def encode(self, params, sequences) -> np.ndarray:
        x = self._check(sequences)
        xs = np.ascontiguousarray(x.T[:, :, None])
        h0 = np.zeros((x.shape[0], self.spec.hidden_width))
        sig = self.spec.activation == "sigmoid"
        hs, _, _ = kernels.lstm_forward(
            xs, params.view("enc.wx"), params.view("enc.wh"), params.view("enc.b"),
            h0, h0.copy(), sig,
        )
        return hs[-1] @ params.view("embed.w") + params.view("embed.b")

    def forward(self, params, sequences):
        x = self._check(sequences)
        n, seq_len = x.shape
        h = self.spec.hidden_width
        sig = self.spec.activation == "sigmoid"
        xs = np.ascontiguousarray(x.T[:, :, None])
        h0 = np.zeros((n, h))
        enc_hs, enc_cs, enc_zs = kernels.lstm_forward(
            xs, params.view("enc.wx"), params.view("enc.wh"), params.view("enc.b"),
            h0, h0.copy(), sig,
        )
        z_embed = enc_hs[-1] @ params.view("embed.w") + params.view("embed.b")
        dec_h0 = z_embed @ params.view("dec_h0.w") + params.view("dec_h0.b")
        dec_c0 = z_embed @ params.view("dec_c0.w") + params.view("dec_c0.b")
        zeros_in = np.zeros((seq_len, n, 1))
        dec_hs, dec_cs, dec_zs = kernels.lstm_forward(
            zeros_in, params.view("dec.wx"), params.view("dec.wh"), params.view("dec.b"),
            dec_h0, dec_c0, sig,
        )
        # readout per step: (T, n, H) @ (H, 1) -> (n, T)
        recon = (dec_hs[1:] @ params.view("out.w"))[:, :, 0].T + params.view("out.b")[0]
        cache = (x, xs, enc_hs, enc_cs, enc_zs, z_embed, dec_hs, dec_cs, dec_zs, zeros_in)
        return recon, cache

    def loss_and_grad(self, params, sequences):
        """Mean Euclidean reconstruction distance and its parameter gradient."""
        recon, cache = self.forward(params, sequences)
        x = cache[0]
        n = x.shape[0]
        resid = recon - x
        norms = np.sqrt(np.sum(resid * resid, axis=1))
        value = float(np.mean(norms))
        safe = np.maximum(norms, 1e-12)
        drecon = resid / (n * safe[:, None])
        grads = self.backward(params, cache, drecon)
        return value, grads

    def backward(self, params, cache, drecon) -> NetworkParams:
        x, xs, enc_hs, enc_cs, enc_zs, z_embed, dec_hs, dec_cs, dec_zs, zeros_in = cache
        n, seq_len = x.shape
        h = self.spec.hidden_width
        sig = self.spec.activation == "sigmoid"
        grads = self._builder.allocate(self.spec.seed)

        # per-step readout, vectorized over t
        out_w = params.view("out.w")
        dy = drecon.T[:, :, None]  # (T, n, 1)
        grads.view("out.w")[:] += (dec_hs[1:] * dy).sum(axis=(0, 1))[:, None]
        grads.view("out.b")[:] += drecon.sum()
        dh_all = dy * out_w[None, None, :, 0]

        dwx, dwh, db, _, dh0, dc0 = kernels.lstm_backward(
            zeros_in, params.view("dec.wx"), params.view("dec.wh"),
            dec_hs, dec_cs, dec_zs, dh_all, sig,
        )
        grads.view("dec.wx")[:] += dwx
        grads.view("dec.wh")[:] += dwh
        grads.view("dec.b")[:] += db

        dz_embed = dh0 @ params.view("dec_h0.w").T + dc0 @ params.view("dec_c0.w").T
        grads.view("dec_h0.w")[:] += z_embed.T @ dh0
        grads.view("dec_h0.b")[:] += dh0.sum(axis=0)
        grads.view("dec_c0.w")[:] += z_embed.T @ dc0
        grads.view("dec_c0.b")[:] += dc0.sum(axis=0)

        grads.view("embed.w")[:] += enc_hs[-1].T @ dz_embed
        grads.view("embed.b")[:] += dz_embed.sum(axis=0)
        denc_h = dz_embed @ params.view("embed.w").T
        dh_enc = np.zeros((seq_len, n, h))
        dh_enc[-1] = denc_h
        dwx, dwh, db, _, _, _ = kernels.lstm_backward(
            xs, params.view("enc.wx"), params.view("enc.wh"),
            enc_hs, enc_cs, enc_zs, dh_enc, sig,
        )
        grads.view("enc.wx")[:] += dwx
        grads.view("enc.wh")[:] += dwh
        grads.view("enc.b")[:] += db
        return grads


@dataclass
class FittedAutoencoder:
    spec: AutoencoderSpec
    params: NetworkParams
    trace: list

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "spec": self.spec.to_json(),
            "params": self.params.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FittedAutoencoder":
        return cls(
            spec=AutoencoderSpec.from_json(doc["spec"]),
            params=NetworkParams.from_json(doc["params"]),
            trace=[],
        )


def autoencoder_fit(
    spec: AutoencoderSpec, sequences, config: TrainConfig
) -> FittedAutoencoder:
    """Train the autoencoder on the given sequences; deterministic per seed."""
    model = SequenceAutoencoder(spec)
    x = model._check(sequences)
    n = x.shape[0]
    rng = np.random.default_rng(spec.seed)
    params = model.init_params(rng)
    adam = AdamState.like(params.values)
    trace = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            value, grads = model.loss_and_grad(params, x[idx])
            if not np.isfinite(value):
                raise NonFiniteLoss(f"reconstruction loss diverged at epoch {epoch}")
            adam.update(params.values, grads.values, config)
            if not np.isfinite(params.values).all():
                raise NonFiniteLoss(f"autoencoder parameters diverged at epoch {epoch}")
            epoch_loss += value * idx.shape[0]
        trace.append({"epoch": epoch, "train_loss": epoch_loss / n})
    return FittedAutoencoder(spec=spec, params=params, trace=trace)


def autoencoder_encode(fitted: FittedAutoencoder, sequences) -> np.ndarray:
    """Deterministic encoder pass: (n, T) sequences to (n, K) embeddings."""
    model = SequenceAutoencoder(fitted.spec)
    return model.encode(fitted.params, sequences)
