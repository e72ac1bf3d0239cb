"""Dense real tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a numpy array.  Operations executed while a ``Tape`` is
active record a backward rule in execution order; ``Tape.backward(loss)``
walks the record in reverse and accumulates gradients into every tensor
that needs one.  Scalar precision is whatever dtype the tensors carry:
float32 for training runs, float64 for gradient and property tests.

With no active tape, the same operations run in inference mode and record
nothing.  A tape and its tensors belong to a single training context; the
active tape is tracked per-context (contextvars), so independent trials in
separate threads never share state.
"""

from __future__ import annotations

from contextvars import ContextVar
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, StateError

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("qprune_active_tape", default=None)


class Tensor:
    """Dense row-major real tensor, optionally differentiable."""

    __slots__ = ("data", "grad", "requires_grad", "_recorded")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._recorded = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def _needs_grad(self) -> bool:
        return self.requires_grad or self._recorded

    def _accum_grad(self, g: np.ndarray) -> None:
        # Always copy on first contribution: backward rules may hand out
        # views or share one buffer between parents.
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


class Tape:
    """Execution-order record of differentiable operations.

    Ops append themselves during the forward pass, so the record is already
    topologically ordered.  One backward traversal consumes the record; a
    second call without a new forward raises ``StateError``.
    """

    def __init__(self):
        self._nodes: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def _record(self, out: Tensor, backward_fn: Callable[[np.ndarray], None]) -> None:
        out._recorded = True
        self._nodes.append((out, backward_fn))

    def __len__(self) -> int:
        return len(self._nodes)

    def backward(self, loss: Tensor) -> None:
        """Populate .grad on every tensor reaching ``loss``; clears the tape."""
        if not self._nodes:
            raise StateError("backward called without a recorded forward pass")
        if loss.data.shape != ():
            raise DimensionError(f"backward expects a scalar loss, got shape {loss.data.shape}")
        if not loss._recorded:
            raise StateError("loss tensor was not produced under this tape")
        loss.grad = np.ones((), dtype=loss.data.dtype)
        for out, backward_fn in reversed(self._nodes):
            g = out.grad
            if g is None:
                continue  # dead branch
            backward_fn(g)
        for out, _ in self._nodes:
            out._recorded = False
            out.grad = None
        self._nodes.clear()


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _maybe_record(out: Tensor, parents: Sequence[Tensor], backward_fn) -> Tensor:
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(p._needs_grad() for p in parents):
        tape._record(out, backward_fn)
    return out


# ---------------------------------------------------------------------------
# elementwise / structural ops


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} differ")
    out = Tensor(a.data + b.data)

    def backward(g):
        if a._needs_grad():
            a._accum_grad(g)
        if b._needs_grad():
            b._accum_grad(g)

    return _maybe_record(out, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"mul: shapes {a.shape} and {b.shape} differ")
    out = Tensor(a.data * b.data)

    def backward(g):
        if a._needs_grad():
            a._accum_grad(g * b.data)
        if b._needs_grad():
            b._accum_grad(g * a.data)

    return _maybe_record(out, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data)

    def backward(g):
        a._accum_grad(-g)

    return _maybe_record(out, (a,), backward)


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * a.data.dtype.type(c))

    def backward(g):
        a._accum_grad(g * a.data.dtype.type(c))

    return _maybe_record(out, (a,), backward)


def relu(a: Tensor) -> Tensor:
    """Elementwise max(0, x); derivative 0 at x == 0."""
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, a.data.dtype.type(0)))

    def backward(g):
        a._accum_grad(g * mask)

    return _maybe_record(out, (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    if int(np.prod(shape)) != a.size and -1 not in tuple(shape):
        raise DimensionError(f"reshape: cannot view {a.shape} as {tuple(shape)}")
    out = Tensor(a.data.reshape(shape))

    def backward(g):
        a._accum_grad(g.reshape(a.shape))

    return _maybe_record(out, (a,), backward)


def flatten(a: Tensor) -> Tensor:
    """Collapse all but the leading (batch) axis, row-major."""
    n = a.shape[0]
    return reshape(a, (n, a.size // n))


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")
    out = Tensor(a.data.T)

    def backward(g):
        a._accum_grad(g.T)

    return _maybe_record(out, (a,), backward)


def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p._needs_grad():
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                p._accum_grad(g[tuple(idx)])

    return _maybe_record(out, parts, backward)


def sum_all(a: Tensor) -> Tensor:
    """Sum of all entries, as a scalar tensor."""
    out = Tensor(a.data.sum())

    def backward(g):
        a._accum_grad(np.broadcast_to(g, a.shape))

    return _maybe_record(out, (a,), backward)


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    """Broadcast a bias vector over the batch: [N,D]+[D] or [N,C,H,W]+[C]."""
    x, b = _as_tensor(x), _as_tensor(b)
    if b.data.ndim != 1:
        raise DimensionError(f"bias must be a vector, got shape {b.shape}")
    if x.data.ndim == 2:
        if x.shape[1] != b.shape[0]:
            raise DimensionError(f"bias length {b.shape[0]} does not match feature size {x.shape[1]}")
        out = Tensor(x.data + b.data)
        reduce_axes = (0,)
    elif x.data.ndim == 4:
        if x.shape[1] != b.shape[0]:
            raise DimensionError(f"bias length {b.shape[0]} does not match channel count {x.shape[1]}")
        out = Tensor(x.data + b.data[None, :, None, None])
        reduce_axes = (0, 2, 3)
    else:
        raise DimensionError(f"bias_add supports 2-D or 4-D inputs, got shape {x.shape}")

    def backward(g):
        if x._needs_grad():
            x._accum_grad(g)
        if b._needs_grad():
            b._accum_grad(g.sum(axis=reduce_axes))

    return _maybe_record(out, (x, b), backward)


# ---------------------------------------------------------------------------
# matmul / conv / pooling


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul expects matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner extents differ, {a.shape} vs {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        if a._needs_grad():
            a._accum_grad(g @ b.data.T)
        if b._needs_grad():
            b._accum_grad(a.data.T @ g)

    return _maybe_record(out, (a, b), backward)


def _im2col3x3(x: np.ndarray) -> np.ndarray:
    """[N,C,H,W] -> [N, C*9, H*W] patch matrix for 3x3/stride-1/pad-1."""
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    cols = np.empty((n, c, 9, h, w), dtype=x.dtype)
    t = 0
    for i in range(3):
        for j in range(3):
            cols[:, :, t] = xp[:, :, i : i + h, j : j + w]
            t += 1
    return cols.reshape(n, c * 9, h * w)


def _col2im3x3(gcols: np.ndarray, n: int, c: int, h: int, w: int) -> np.ndarray:
    """Adjoint of _im2col3x3: scatter-add patches back to [N,C,H,W]."""
    g5 = gcols.reshape(n, c, 9, h, w)
    gxp = np.zeros((n, c, h + 2, w + 2), dtype=gcols.dtype)
    t = 0
    for i in range(3):
        for j in range(3):
            gxp[:, :, i : i + h, j : j + w] += g5[:, :, t]
            t += 1
    return gxp[:, :, 1:-1, 1:-1]


def conv2d(x: Tensor, k: Tensor) -> Tensor:
    """3x3 cross-correlation, stride 1, zero-padding 1 (same spatial size).

    Same-padding is fixed: it keeps H x W through every conv so the pooled
    feature counts line up with the fully-connected fan-ins.
    """
    x, k = _as_tensor(x), _as_tensor(k)
    if x.data.ndim != 4:
        raise DimensionError(f"conv2d input must be [N,C,H,W], got shape {x.shape}")
    if k.data.ndim != 4 or k.shape[2:] != (3, 3):
        raise DimensionError(f"conv2d kernel must be [F,C,3,3], got shape {k.shape}")
    n, c, h, w = x.shape
    f, ck = k.shape[0], k.shape[1]
    if ck != c:
        raise DimensionError(f"conv2d: input has {c} channels but kernel expects {ck}")
    cols = _im2col3x3(x.data)  # [N, C*9, H*W]
    k2 = k.data.reshape(f, c * 9)
    out = Tensor(np.matmul(k2, cols).reshape(n, f, h, w))

    def backward(g):
        g2 = g.reshape(n, f, h * w)
        if k._needs_grad():
            gk = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            k._accum_grad(gk.reshape(f, c, 3, 3))
        if x._needs_grad():
            gcols = np.matmul(k2.T, g2)  # [N, C*9, H*W]
            x._accum_grad(_col2im3x3(gcols, n, c, h, w))

    return _maybe_record(out, (x, k), backward)


def maxpool2d(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2; gradient goes to the first max per window
    in row-major window order."""
    x = _as_tensor(x)
    if x.data.ndim != 4:
        raise DimensionError(f"maxpool2d input must be [N,C,H,W], got shape {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"maxpool2d needs even spatial extents, got {h}x{w}")
    windows = (
        x.data.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    argmax = windows.argmax(axis=-1)  # first occurrence on ties (row-major window scan)
    out = Tensor(np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0])

    def backward(g):
        gw = np.zeros_like(windows)
        np.put_along_axis(gw, argmax[..., None], g[..., None], axis=-1)
        gx = (
            gw.reshape(n, c, h // 2, w // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )
        x._accum_grad(gx)

    return _maybe_record(out, (x,), backward)


# ---------------------------------------------------------------------------
# loss


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean over the batch of -log softmax(logits)[label].

    Stabilized by row-max subtraction.  Gradient: (softmax - onehot) / N.
    """
    logits = _as_tensor(logits)
    if logits.data.ndim != 2:
        raise DimensionError(f"logits must be [N,C], got shape {logits.shape}")
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    out = Tensor(-logp[np.arange(n), labels].mean())

    def backward(g):
        p = np.exp(logp)
        p[np.arange(n), labels] -= 1
        logits._accum_grad(g * p / logits.data.dtype.type(n))

    return _maybe_record(out, (logits,), backward)
