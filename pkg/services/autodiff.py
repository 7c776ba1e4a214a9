"""
Reverse-mode automatic differentiation over float64 numpy arrays.

Operations record themselves on the active `Tape` (entered with `with Tape() as tape:`)
whenever at least one input requires a gradient. Outside a tape nothing is recorded, which
is how inference and finite-difference probes run.
"""
import contextvars
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import ContractError, DimensionError, LabelError, NumericError

logger = logging.getLogger(__name__)

_ACTIVE_TAPE: contextvars.ContextVar[Optional["Tape"]] = contextvars.ContextVar("active_tape", default=None)

GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """An n-dimensional float64 array with an optional gradient buffer."""

    __slots__ = ("values", "requires_grad", "grad", "node_id", "name")

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node_id: Optional[int] = None
        self.name = name

    @classmethod
    def _wrap(cls, values: np.ndarray) -> "Tensor":
        # Engine results own their buffer already.
        tensor = cls.__new__(cls)
        tensor.values = values
        tensor.requires_grad = False
        tensor.grad = None
        tensor.node_id = None
        tensor.name = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        return float(self.values.reshape(-1)[0]) if self.values.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def detach(self) -> "Tensor":
        return Tensor(self.values)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass
class TapeNode:
    inputs: Tuple[int, ...]
    output: int
    backward_fn: GradFn
    op: str


class Tape:
    """
    Define-by-run record of one forward pass.
    A tape belongs to a single training context; nodes are appended in execution order,
    so the node list is already topologically sorted.
    """

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self._tensors: List[Tensor] = []
        self._index: Dict[int, int] = {}
        self._token: Optional[contextvars.Token] = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def _register(self, tensor: Tensor) -> int:
        node_id = self._index.get(id(tensor))
        if node_id is None:
            node_id = len(self._tensors)
            self._tensors.append(tensor)
            self._index[id(tensor)] = node_id
            tensor.node_id = node_id
        return node_id

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward_fn: GradFn, op: str) -> None:
        input_ids = tuple(self._register(t) for t in inputs)
        self.nodes.append(TapeNode(input_ids, self._register(output), backward_fn, op))

    def backward(self, loss: Tensor) -> None:
        if loss.values.shape != ():
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        loss_id = self._index.get(id(loss))
        if loss_id is None:
            raise ContractError("loss was not produced on this tape")

        grads: Dict[int, np.ndarray] = {loss_id: np.ones(())}
        for node in reversed(self.nodes):
            upstream = grads.get(node.output)
            if upstream is None:
                continue
            for input_id, input_grad in zip(node.inputs, node.backward_fn(upstream)):
                if input_grad is None or not self._tensors[input_id].requires_grad:
                    continue
                previous = grads.get(input_id)
                grads[input_id] = input_grad if previous is None else previous + input_grad

        for node_id, grad in grads.items():
            tensor = self._tensors[node_id]
            if not tensor.requires_grad:
                continue
            _check_finite(grad, f"gradient of {tensor.name or 'tensor'}")
            tensor.grad = np.array(grad, dtype=np.float64) if tensor.grad is None else tensor.grad + grad
        logger.debug("Backward pass visited %d node(s).", len(self.nodes))


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def backward(loss: Tensor, tape: Tape) -> None:
    tape.backward(loss)


def zero_grads(params: Iterable[Tensor]) -> None:
    for param in params:
        param.zero_grad()


def _check_finite(values: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{op} produced non-finite values")


def _result(values: np.ndarray, inputs: Sequence[Tensor], backward_fn: GradFn, op: str) -> Tensor:
    _check_finite(values, op)
    out = Tensor._wrap(values)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward_fn, op)
    return out


def _require_2d(x: Tensor, op: str) -> None:
    if x.values.ndim != 2:
        raise DimensionError(f"{op} expects a 2-D tensor, got shape {x.shape}")


# --- Linear algebra -------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul cannot combine shapes {a.shape} and {b.shape}")
    av, bv = a.values, b.values

    def grad_fn(g):
        return g @ bv.T, av.T @ g

    return _result(av @ bv, (a, b), grad_fn, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum. The only broadcast allowed is a bias row: [B×n] + [1×n]."""
    if a.shape == b.shape:
        return _result(a.values + b.values, (a, b), lambda g: (g, g), "add")
    if a.values.ndim == 2 and b.values.ndim == 2 and b.shape == (1, a.shape[1]):
        return _result(a.values + b.values, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)), "add_bias")
    raise DimensionError(f"add cannot combine shapes {a.shape} and {b.shape}")


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"mul cannot combine shapes {a.shape} and {b.shape}")
    av, bv = a.values, b.values
    return _result(av * bv, (a, b), lambda g: (g * bv, g * av), "mul")


def concat_rows(a: Tensor, b: Tensor) -> Tensor:
    """Joins [B×p] and [B×q] into [B×(p+q)], columns of `a` first."""
    _require_2d(a, "concat_rows")
    _require_2d(b, "concat_rows")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"concat_rows needs equal batch sizes, got {a.shape} and {b.shape}")
    split = a.shape[1]
    return _result(
        np.concatenate([a.values, b.values], axis=1),
        (a, b),
        lambda g: (g[:, :split], g[:, split:]),
        "concat_rows",
    )


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    _require_2d(x, "slice_cols")
    if not 0 <= start < stop <= x.shape[1]:
        raise DimensionError(f"slice_cols [{start}:{stop}] is outside shape {x.shape}")
    shape = x.shape

    def grad_fn(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return _result(x.values[:, start:stop].copy(), (x,), grad_fn, "slice_cols")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    original = x.shape
    try:
        values = x.values.reshape(tuple(shape))
    except ValueError as e:
        raise DimensionError(f"cannot reshape {original} into {tuple(shape)}") from e
    return _result(values.copy(), (x,), lambda g: (g.reshape(original),), "reshape")


def tensor_sum(x: Tensor) -> Tensor:
    shape = x.shape
    return _result(np.array(x.values.sum()), (x,), lambda g: (np.full(shape, float(g)),), "sum")


def stop_gradient(x: Tensor) -> Tensor:
    """A value copy with no tape linkage; gradients never flow through it."""
    return Tensor(x.values)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup `weight[ids]` for a 1-D integer id array."""
    _require_2d(weight, "embedding")
    ids = np.asarray(ids, dtype=np.int64)
    bad = np.flatnonzero((ids < 0) | (ids >= weight.shape[0]))
    if bad.size:
        raise LabelError(
            f"token id {int(ids[bad[0]])} at position {int(bad[0])} is outside vocabulary of size {weight.shape[0]}"
        )
    shape = weight.shape

    def grad_fn(g):
        full = np.zeros(shape)
        np.add.at(full, ids, g)
        return (full,)

    return _result(weight.values[ids], (weight,), grad_fn, "embedding")


# --- Nonlinearities -------------------------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    active = x.values > 0
    return _result(np.where(active, x.values, 0.0), (x,), lambda g: (g * active,), "relu")


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (1.0 + np.tanh(0.5 * x.values))
    return _result(s, (x,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.values)
    return _result(t, (x,), lambda g: (g * (1.0 - t * t),), "tanh")


def softmax(logits: Tensor) -> Tensor:
    _require_2d(logits, "softmax")
    if logits.shape[1] < 1:
        raise DimensionError("softmax needs at least one class column")
    _check_finite(logits.values, "softmax input")
    shifted = logits.values - logits.values.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)

    def grad_fn(g):
        return (probs * (g - (g * probs).sum(axis=1, keepdims=True)),)

    return _result(probs, (logits,), grad_fn, "softmax")


def sparse_categorical_cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean over the batch of -log softmax(logits)[i, labels[i]]."""
    _require_2d(logits, "sparse_categorical_cross_entropy")
    labels = np.asarray(labels, dtype=np.int64)
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError(f"expected {batch} labels, got {labels.shape[0] if labels.ndim else 0}")
    bad = np.flatnonzero((labels < 0) | (labels >= classes))
    if bad.size:
        raise LabelError(f"label {int(labels[bad[0]])} at index {int(bad[0])} is outside [0, {classes})")
    _check_finite(logits.values, "cross-entropy input")

    shifted = logits.values - logits.values.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(batch)
    loss = -log_probs[rows, labels].mean()

    def grad_fn(g):
        d = np.exp(log_probs)
        d[rows, labels] -= 1.0
        return (d * (float(g) / batch),)

    return _result(np.array(loss), (logits,), grad_fn, "sparse_categorical_cross_entropy")


# --- Convolution and pooling ----------------------------------------------------------------

def conv2d(
    x: Tensor,
    kernels: Tensor,
    stride: int = 1,
    padding: int = 0,
    bias: Optional[Tensor] = None,
) -> Tensor:
    """
    Valid cross-correlation over a zero-padded input.
    Accepts a single image [C_in×H×W] or a batch [B×C_in×H×W]; kernels are [C_out×C_in×kH×kW].
    """
    if stride < 1 or padding < 0:
        raise ContractError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    batched = x.values.ndim == 4
    if x.values.ndim not in (3, 4) or kernels.values.ndim != 4:
        raise DimensionError(f"conv2d cannot combine input {x.shape} with kernels {kernels.shape}")
    xv = x.values if batched else x.values[np.newaxis]
    out_ch, in_ch, kh, kw = kernels.shape
    _, channels, height, width = xv.shape
    if channels != in_ch:
        raise DimensionError(f"conv2d input has {channels} channel(s) but kernels {kernels.shape} expect {in_ch}")
    if kh > height + 2 * padding or kw > width + 2 * padding:
        raise DimensionError(
            f"conv2d kernel {kh}x{kw} is larger than padded input {height + 2 * padding}x{width + 2 * padding}"
        )
    if bias is not None and bias.shape != (out_ch,):
        raise DimensionError(f"conv2d bias must have shape ({out_ch},), got {bias.shape}")

    padded = np.pad(xv, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    kv = kernels.values
    out = np.tensordot(windows, kv, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.values[np.newaxis, :, np.newaxis, np.newaxis]
    out = np.ascontiguousarray(out)

    def grad_fn(g):
        g4 = g if batched else g[np.newaxis]
        grad_kernels = np.tensordot(g4, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_windows = np.tensordot(g4, kv, axes=([1], [0]))  # B×H'×W'×C×kH×kW
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                grad_padded[
                    :, :, i : i + stride * (out_h - 1) + 1 : stride, j : j + stride * (out_w - 1) + 1 : stride
                ] += grad_windows[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        grad_x = grad_padded[:, :, padding : padding + height, padding : padding + width]
        if not batched:
            grad_x = grad_x[0]
        grad_bias = g4.sum(axis=(0, 2, 3)) if bias is not None else None
        return grad_x, grad_kernels, grad_bias

    inputs = (x, kernels, bias) if bias is not None else (x, kernels)
    return _result(out if batched else out[0], inputs, grad_fn, "conv2d")


def max_pool2d(x: Tensor, size: int = 2) -> Tensor:
    """Non-overlapping max pooling; trailing rows/columns that do not fill a window are dropped."""
    batched = x.values.ndim == 4
    if x.values.ndim not in (3, 4):
        raise DimensionError(f"max_pool2d expects a 3-D or 4-D tensor, got {x.shape}")
    xv = x.values if batched else x.values[np.newaxis]
    b, c, h, w = xv.shape
    out_h, out_w = h // size, w // size
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"max_pool2d window {size} is larger than input {h}x{w}")
    cropped = xv[:, :, : out_h * size, : out_w * size]
    windows = (
        cropped.reshape(b, c, out_h, size, out_w, size).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, out_h, out_w, -1)
    )
    winners = windows.argmax(axis=-1)[..., np.newaxis]
    out = np.take_along_axis(windows, winners, axis=-1)[..., 0]
    full_shape = xv.shape

    def grad_fn(g):
        g4 = g if batched else g[np.newaxis]
        grad_windows = np.zeros_like(windows)
        np.put_along_axis(grad_windows, winners, g4[..., np.newaxis], axis=-1)
        grad_cropped = (
            grad_windows.reshape(b, c, out_h, out_w, size, size)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, out_h * size, out_w * size)
        )
        grad_x = np.zeros(full_shape)
        grad_x[:, :, : out_h * size, : out_w * size] = grad_cropped
        return (grad_x if batched else grad_x[0],)

    return _result(out if batched else out[0], (x,), grad_fn, "max_pool2d")


# --- Verification ---------------------------------------------------------------------------

def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """
    Largest relative disagreement between backward's gradient for `x` and central
    finite differences, with denominator max(|a|, |b|, 1e-8). Non-finite values count as
    failure (returned as infinity).
    """
    if not 0.0 < eps <= 1e-2:
        raise ContractError(f"eps must lie in (0, 1e-2], got {eps}")
    x.requires_grad = True
    x.grad = None
    with Tape() as tape:
        loss = f(x)
    tape.backward(loss)
    analytic = x.grad if x.grad is not None else np.zeros_like(x.values)

    original = x.values.copy()
    worst = 0.0
    try:
        for index in np.ndindex(*x.shape):
            x.values[index] = original[index] + eps
            plus = f(x).item()
            x.values[index] = original[index] - eps
            minus = f(x).item()
            x.values[index] = original[index]
            numeric = (plus - minus) / (2.0 * eps)
            a = float(analytic[index])
            if not (np.isfinite(numeric) and np.isfinite(a)):
                return float("inf")
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
    except NumericError:
        return float("inf")
    finally:
        x.values[...] = original
    return worst
