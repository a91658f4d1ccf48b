"""Minimal dense-tensor arithmetic with reverse-mode automatic differentiation.

Tensors are immutable float64 arrays.  Operations executed while a GradTape is
active are recorded in order; `backward` replays the tape in reverse and
returns one gradient per requested parameter.  Every primitive checks its
output for NaN/Inf (an error state, not a value), and the backward pass checks
every produced gradient the same way, reporting the primitive responsible.

The primitive set is deliberately small: add, sub, mul, matmul, affine, tanh,
sigmoid, relu, mean, sum, square, log, exp, concat, slicing, clip, reshape,
broadcast_to, detach.  Enough to express the encoder/generator/discriminator
stacks and every loss in the library.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "Tensor", "GradTape", "backward", "NumericsError", "GradientError",
    "add", "sub", "mul", "neg", "matmul", "affine", "tanh", "sigmoid", "relu",
    "mean", "sum", "square", "log", "exp", "concat", "clip", "reshape",
    "broadcast_to", "detach",
]

_builtin_sum = sum


class NumericsError(RuntimeError):
    """A forward computation produced NaN or Inf."""


class GradientError(RuntimeError):
    """backward() was asked something impossible or produced non-finite grads."""


def _check_finite(op: str, data: np.ndarray) -> None:
    if not np.isfinite(data).all():
        raise NumericsError(f"non-finite value produced by primitive '{op}'")


class Tensor:
    """Immutable float64 array, optionally a trainable leaf (requires_grad)."""

    __slots__ = ("data", "requires_grad", "_tape")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)  # owning copy
        _check_finite("tensor", arr)
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._tape = None

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # Internal fast path for op outputs: no copy, already finite-checked.
        t = object.__new__(cls)
        arr.setflags(write=False)
        t.data = arr
        t.requires_grad = False
        t._tape = None
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar — every route goes through the recorded primitives below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return _slice(self, idx)


class _Rec:
    __slots__ = ("op", "inputs", "out", "vjp")

    def __init__(self, op, inputs, out, vjp):
        self.op = op
        self.inputs = inputs
        self.out = out
        self.vjp = vjp


_state = threading.local()


def _active_tape():
    return getattr(_state, "tape", None)


class GradTape:
    """Ordered record of the primitives applied during one loss evaluation.

    Use as a context manager; a tape is confined to one thread and one loss
    evaluation.  Entering a tape while another is active nests: only the
    innermost tape records.
    """

    def __init__(self):
        self.records: list[_Rec] = []
        self._tracked_ids: set[int] = set()

    def __enter__(self):
        self._outer = _active_tape()
        _state.tape = self
        return self

    def __exit__(self, *exc):
        _state.tape = self._outer
        return False

    def _tracks(self, t: Tensor) -> bool:
        return t.requires_grad or id(t) in self._tracked_ids


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _emit(op: str, out_data: np.ndarray, inputs: tuple, vjp) -> Tensor:
    _check_finite(op, out_data)
    out = Tensor._wrap(out_data)
    tape = _active_tape()
    if tape is not None and any(tape._tracks(t) for t in inputs):
        tape._tracked_ids.add(id(out))
        tape.records.append(_Rec(op, inputs, out, vjp))
        out._tape = tape
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise / arithmetic -------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data
    return _emit("add", out, (a, b),
                 lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data - b.data
    return _emit("sub", out, (a, b),
                 lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data
    return _emit("mul", out, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.data.shape),
                            _unbroadcast(g * a.data, b.data.shape)))


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    return _emit("square", a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _emit("log", out, (a,), lambda g: (g / a.data,))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                   np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    return _emit("relu", np.maximum(a.data, 0.0), (a,),
                 lambda g: (g * (a.data > 0.0),))


def clip(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    out = np.clip(a.data, lo, hi)
    mask = (a.data >= lo) & (a.data <= hi)
    return _emit("clip", out, (a,), lambda g: (g * mask,))


# -- linear algebra -----------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise GradientError("matmul expects 2-D tensors")
    out = a.data @ b.data
    return _emit("matmul", out, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def affine(x, w, b) -> Tensor:
    """x @ w + b for a (batch, in) input, (in, out) weight, (out,) bias."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.ndim != 2 or w.ndim != 2 or b.ndim != 1:
        raise GradientError("affine expects (B,in) @ (in,out) + (out,)")
    out = x.data @ w.data + b.data
    return _emit("affine", out, (x, w, b),
                 lambda g: (g @ w.data.T, x.data.T @ g, g.sum(axis=0)))


# -- shape / reduction --------------------------------------------------------

def _axis_tuple(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - deliberate numpy-style name
    a = _as_tensor(a)
    axes = _axis_tuple(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        gg = g if keepdims or a.ndim == 0 else np.expand_dims(g, axes)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _emit("sum", out, (a,), vjp)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    axes = _axis_tuple(axis, a.ndim)
    count = int(np.prod([a.data.shape[i] for i in axes])) if axes else 1
    out = a.data.mean(axis=axes, keepdims=keepdims) if axes else a.data.copy()

    def vjp(g):
        gg = g if keepdims or a.ndim == 0 else np.expand_dims(g, axes)
        return (np.broadcast_to(gg, a.data.shape) / count,)

    return _emit("mean", out, (a,), vjp)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = a.data.reshape(shape)

    def vjp(g):
        return (g.reshape(a.data.shape),)

    return _emit("reshape", out.copy(), (a,), vjp)


def broadcast_to(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = np.broadcast_to(a.data, shape).copy()
    return _emit("broadcast", out, (a,), lambda g: (_unbroadcast(g, a.data.shape),))


def concat(tensors, axis: int = 0) -> Tensor:
    ts = tuple(_as_tensor(t) for t in tensors)
    if not ts:
        raise GradientError("concat of an empty sequence")
    out = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _emit("concat", out, ts, vjp)


def _slice(a, idx) -> Tensor:
    a = _as_tensor(a)
    out = a.data[idx]

    def vjp(g):
        buf = np.zeros(a.data.shape)
        buf[idx] = g  # basic indexing: no repeated positions
        return (buf,)

    return _emit("slice", np.array(out), (a,), vjp)


def detach(a) -> Tensor:
    """Constant copy: same values, no gradient path."""
    a = _as_tensor(a)
    return Tensor._wrap(a.data.copy())


# -- backward -----------------------------------------------------------------

def backward(loss: Tensor, params) -> list[np.ndarray]:
    """Gradient of a scalar loss w.r.t. each parameter, in order.

    Parameters never touched by the loss get zero gradients.  Raises
    GradientError for a non-scalar loss, for parameters that are not
    trainable leaves, and when the replay produces a non-finite gradient
    (the message names the responsible primitive).
    """
    params = list(params)
    if not isinstance(loss, Tensor):
        raise GradientError("loss must be a Tensor")
    if loss.size != 1:
        raise GradientError(f"loss must be scalar, got shape {loss.shape}")
    for p in params:
        if not isinstance(p, Tensor) or not p.requires_grad:
            raise GradientError("every parameter must be a requires_grad Tensor")
    tape = loss._tape
    if tape is None:
        # loss not produced from tracked tensors: every gradient is zero
        return [np.zeros(p.shape) for p in params]

    grads: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            inp_grads = rec.vjp(g)
        for t, ig in zip(rec.inputs, inp_grads):
            if ig is None or not tape._tracks(t):
                continue
            if not np.isfinite(ig).all():
                raise GradientError(
                    f"non-finite gradient produced by primitive '{rec.op}'")
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + ig
            else:
                grads[key] = np.asarray(ig, dtype=np.float64)

    out = []
    for p in params:
        g = grads.get(id(p))
        out.append(np.zeros(p.shape) if g is None else g.reshape(p.shape))
    return out
