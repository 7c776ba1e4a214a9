"""
Single-layer LSTM text encoder: embedding lookup, then the standard four-gate cell,
returning the hidden state at each sequence's last real token.
"""
from typing import Sequence, Union

import numpy as np

from errors import LabelError
from models.layers import Module, glorot_uniform
from schemas.records import EncodedText
from services.autodiff import Tensor, add, embedding, matmul, mul, sigmoid, slice_cols, tanh
from services.text_pipeline import as_arrays


class TextEncoder(Module):
    """Gate order inside the packed weights is input, forget, cell, output."""

    def __init__(self, vocab_size: int, embed_dim: int = 128, hidden_size: int = 256, forget_bias: float = 1.0, rng=None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.vocab_size = vocab_size
        self.hidden_size = hidden_size
        h = hidden_size
        self.embedding = self.register("embedding", glorot_uniform(rng, (vocab_size, embed_dim), vocab_size, embed_dim, "embedding"))
        self.w_input = self.register("w_input", glorot_uniform(rng, (embed_dim, 4 * h), embed_dim, 4 * h, "w_input"))
        self.w_hidden = self.register("w_hidden", glorot_uniform(rng, (h, 4 * h), h, 4 * h, "w_hidden"))
        bias = np.zeros((1, 4 * h))
        bias[0, h : 2 * h] = forget_bias
        self.bias = self.register("bias", Tensor(bias, requires_grad=True, name="bias"))

    @property
    def output_dim(self) -> int:
        return self.hidden_size

    def __call__(self, ids: np.ndarray, lengths: np.ndarray) -> Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            bad = int(ids[(ids < 0) | (ids >= self.vocab_size)][0])
            raise LabelError(f"token id {bad} is outside vocabulary of size {self.vocab_size}")

        batch, h = ids.shape[0], self.hidden_size
        hidden = Tensor(np.zeros((batch, h)))
        cell = Tensor(np.zeros((batch, h)))
        steps = int(lengths.max()) if batch else 0
        for t in range(steps):
            x = embedding(self.embedding, ids[:, t])
            z = add(add(matmul(x, self.w_input), matmul(hidden, self.w_hidden)), self.bias)
            i = sigmoid(slice_cols(z, 0, h))
            f = sigmoid(slice_cols(z, h, 2 * h))
            g = tanh(slice_cols(z, 2 * h, 3 * h))
            o = sigmoid(slice_cols(z, 3 * h, 4 * h))
            new_cell = add(mul(f, cell), mul(i, g))
            new_hidden = mul(o, tanh(new_cell))

            live = t < lengths
            if live.all():
                hidden, cell = new_hidden, new_cell
                continue
            # Finished sequences keep their state exactly.
            keep = np.repeat(live[:, np.newaxis].astype(np.float64), h, axis=1)
            on, off = Tensor(keep), Tensor(1.0 - keep)
            hidden = add(mul(new_hidden, on), mul(hidden, off))
            cell = add(mul(new_cell, on), mul(cell, off))
        return hidden


def lstm_forward(encoder: TextEncoder, batch: Union[Sequence[EncodedText], tuple]) -> Tensor:
    """Final hidden states [B×hidden] for a list of encoded texts (or an (ids, lengths) pair)."""
    if isinstance(batch, tuple):
        ids, lengths = batch
    else:
        ids, lengths = as_arrays(batch)
    return encoder(ids, lengths)
