"""
Minimal dense tensor kernel with reverse-mode autodiff on numpy arrays.

Ops called inside an active ``Tape`` record a backward closure when any
input is a trainable leaf (``requires_grad``) or was itself produced on
that tape.  Outside a tape the same ops run as plain numpy (inference).

    with Tape() as tape:
        loss = sum_all(matmul(x, W))
    grads = tape.backward(loss)          # {W: dW, ...}; also sets W.grad

Broadcasting is limited to a suffix shape (bias / gain vectors) so shape
slips fail loudly instead of silently broadcasting.
"""

from __future__ import annotations

import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import NotScalar, ShapeError, TapeError

MASK_OFFSET = -1e9

_state = threading.local()


# ── Tensor / Tape ────────────────────────────────────────────────────────────

class Tensor:
    """numpy array plus an optional gradient slot. Hashes by identity."""

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        arr = np.asarray(data)
        if requires_grad and not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._tape: Optional["Tape"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, _as_tensor(other))

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __neg__(self):
        return scale(self, -1.0)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered record of traced ops; backward may run once per tape."""

    def __init__(self):
        self.records: List[Tuple[Tensor, Tuple[Tensor, ...], BackwardFn]] = []
        self.used = False

    def __enter__(self) -> "Tape":
        stack = getattr(_state, "stack", None)
        if stack is None:
            stack = _state.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _state.stack.pop()

    def tracks(self, t: Tensor) -> bool:
        return t.requires_grad or t._tape is self

    def backward(self, loss: Tensor) -> Dict[Tensor, np.ndarray]:
        if loss.ndim != 0:
            raise NotScalar(f"backward needs a rank-0 loss, got shape {loss.shape}")
        if self.used:
            raise TapeError("backward already ran on this tape; trace the computation again")
        self.used = True

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: Dict[int, Tensor] = {id(loss): loss} if loss.requires_grad else {}
        for out, inputs, fn in reversed(self.records):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not self.tracks(inp):
                    continue
                key = id(inp)
                grads[key] = grads[key] + gi if key in grads else gi
                if inp.requires_grad:
                    leaves[key] = inp
        # Records hold every intermediate and close a cycle through ``_tape``.
        self.records.clear()

        result: Dict[Tensor, np.ndarray] = {}
        for key, leaf in leaves.items():
            g = grads.get(key)
            if g is None:
                continue
            leaf.grad = g
            result[leaf] = g
        return result


def _active_tape() -> Optional[Tape]:
    stack = getattr(_state, "stack", None)
    return stack[-1] if stack else None


def _make(data: np.ndarray, inputs: Tuple[Tensor, ...], fn: BackwardFn) -> Tensor:
    out = Tensor(data)
    tape = _active_tape()
    if tape is not None and any(tape.tracks(t) for t in inputs):
        out._tape = tape
        tape.records.append((out, inputs, fn))
    return out


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """Gradients of ``loss`` for every trainable leaf on the tape that produced it."""
    if loss.ndim != 0:
        raise NotScalar(f"backward needs a rank-0 loss, got shape {loss.shape}")
    if loss._tape is None:
        raise TapeError("loss was not produced under an active Tape")
    return loss._tape.backward(loss)


# ── Shape helpers ────────────────────────────────────────────────────────────

def _is_suffix(small: Tuple[int, ...], big: Tuple[int, ...]) -> bool:
    return len(small) <= len(big) and big[len(big) - len(small):] == small


def _binary_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    if a.shape == b.shape or _is_suffix(b.shape, a.shape):
        return a.shape
    if _is_suffix(a.shape, b.shape):
        return b.shape
    raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return g.reshape((-1,) + shape).sum(axis=0)


# ── Elementwise ──────────────────────────────────────────────────────────────

def add(a: Tensor, b: Tensor) -> Tensor:
    _binary_shape(a, b, "add")
    return _make(a.data + b.data, (a, b),
                 lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _binary_shape(a, b, "sub")
    return _make(a.data - b.data, (a, b),
                 lambda g: (_reduce_to(g, a.shape), -_reduce_to(g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _binary_shape(a, b, "mul")
    return _make(a.data * b.data, (a, b),
                 lambda g: (_reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)))


def scale(a: Tensor, k: float) -> Tensor:
    return _make(a.data * k, (a,), lambda g: (g * k,))


def relu(a: Tensor) -> Tensor:
    keep = a.data > 0
    return _make(np.where(keep, a.data, 0).astype(a.dtype), (a,), lambda g: (g * keep,))


def log(a: Tensor) -> Tensor:
    safe = np.maximum(a.data, np.finfo(a.dtype).tiny)
    return _make(np.log(safe), (a,), lambda g: (g / safe,))


def add_mask(a: Tensor, keep: np.ndarray, offset: float = MASK_OFFSET) -> Tensor:
    """Add ``offset`` where the boolean ``keep`` mask (numpy-broadcast to a) is False."""
    bias = np.where(keep, 0.0, offset).astype(a.dtype)
    try:
        shape = np.broadcast_shapes(a.shape, bias.shape)
    except ValueError:
        shape = None
    if shape != a.shape:
        raise ShapeError(f"add_mask: mask shape {keep.shape} does not broadcast to {a.shape}")
    return _make(a.data + bias, (a,), lambda g: (g,))


def dropout(a: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when rate is 0 or no generator is given."""
    if rate <= 0.0 or rng is None:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.dtype) / (1.0 - rate)
    return _make(a.data * keep, (a,), lambda g: (g * keep,))


# ── Linear algebra / structure ───────────────────────────────────────────────

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over equal leading axes; a rank-2 ``b`` is shared across the batch."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2] or (
        b.ndim > 2 and a.shape[:-2] != b.shape[:-2]
    ):
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    shared = b.ndim == 2 and a.ndim > 2

    def fn(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        if shared:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return _make(a.data @ b.data, (a, b), fn)


def concat_last(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_last: leading shapes differ, {a.shape} and {b.shape}")
    k = a.shape[-1]
    return _make(np.concatenate([a.data, b.data], axis=-1), (a, b), lambda g: (g[..., :k], g[..., k:]))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: cannot reshape {a.shape} to {tuple(shape)}") from e
    return _make(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: axes {axes} invalid for shape {a.shape}")
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def embed(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather ``table[ids]``; repeated ids accumulate gradient."""
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise ShapeError(f"embed: table must be rank 2, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embed: ids out of range for table {table.shape}")

    def fn(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return (gt,)

    return _make(table.data[ids], (table,), fn)


def gather_last(a: Tensor, index: np.ndarray) -> Tensor:
    """``out[...] = a[..., index[...]]``."""
    index = np.asarray(index)
    if index.shape != a.shape[:-1]:
        raise ShapeError(f"gather_last: index shape {index.shape} vs tensor {a.shape}")
    idx = index[..., None]

    def fn(g):
        ga = np.zeros_like(a.data)
        np.put_along_axis(ga, idx, g[..., None], axis=-1)
        return (ga,)

    return _make(np.take_along_axis(a.data, idx, axis=-1)[..., 0], (a,), fn)


def sum_all(a: Tensor) -> Tensor:
    return _make(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


# ── Normalisation ────────────────────────────────────────────────────────────

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"softmax: axis {axis} invalid for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return _make(y, (a,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),))


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(f"layer_norm: gain {gain.shape} / bias {bias.shape} vs last axis {d}")
    mu = a.data.mean(axis=-1, keepdims=True)
    var = a.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv

    def fn(g):
        dxhat = g * gain.data
        dx = inv / d * (d * dxhat - dxhat.sum(-1, keepdims=True) - xhat * (dxhat * xhat).sum(-1, keepdims=True))
        return dx, _reduce_to(g * xhat, (d,)), _reduce_to(g, (d,))

    return _make(xhat * gain.data + bias.data, (a, gain, bias), fn)


# ── Gradient check ───────────────────────────────────────────────────────────

def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    n_samples: Optional[int] = None,
    seed: int = 0,
    atol: float = 1e-7,
) -> float:
    """
    Max relative error between tape gradients and central differences.

    ``f`` is re-evaluated with each sampled coordinate nudged by ±eps; it must
    be deterministic (dropout off).  Relative error is |a−n| / max(|a|+|n|, atol).
    """
    with Tape() as tape:
        loss = f()
    grads = tape.backward(loss)

    coords = [(pi, j) for pi, p in enumerate(params) for j in range(p.data.size)]
    if n_samples is not None and n_samples < len(coords):
        pick = np.random.default_rng(seed).choice(len(coords), size=n_samples, replace=False)
        coords = [coords[k] for k in sorted(pick)]

    worst = 0.0
    for pi, j in coords:
        p = params[pi]
        at = np.unravel_index(j, p.shape)
        orig = p.data[at]
        p.data[at] = orig + eps
        f_plus = float(f().data)
        p.data[at] = orig - eps
        f_minus = float(f().data)
        p.data[at] = orig
        numeric = (f_plus - f_minus) / (2 * eps)
        g = grads.get(p)
        analytic = float(g.reshape(-1)[j]) if g is not None else 0.0
        err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), atol)
        worst = max(worst, err)
    return worst
