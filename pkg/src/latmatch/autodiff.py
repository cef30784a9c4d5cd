"""Minimal reverse-mode automatic differentiation over dense float64 tensors.

The op set is exactly what the matching model needs: matmul, elementwise
arithmetic, concat/slice/gather, the usual nonlinearities, axis
reductions, softmax, layer normalization and cosine similarity. The
graph is taped dynamically: every op result remembers its parents and a
closure that routes the incoming gradient to them. `backward()` on a
scalar walks the tape once in reverse topological order, accumulating
(summing) gradients into every `requires_grad` tensor it can reach.

Shape discipline is deliberately strict: the only broadcast allowed is
bias addition (matrix + row vector). Everything else must match
exactly, which keeps every backward rule short enough to audit.

Tensors with requires_grad=False are treated as immutable constants and
may be shared freely; taped graphs must not be shared across threads.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as K

LAYER_NORM_EPS = 1e-12
COSINE_EPS = 1e-8

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable taping inside the block (evaluation fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class ShapeMismatch(ValueError):
    """Raised when operand shapes do not conform for an op."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {self.shapes}")


class Tensor:
    """Dense float64 value with an optional gradient trace."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        # np.ascontiguousarray would promote 0-d arrays to 1-d; keep rank.
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 0 and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Operator sugar for the common binary ops.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _make(data: np.ndarray, parents: Sequence[Tensor],
          backward_fn: Callable[[np.ndarray], None]) -> Tensor:
    requires = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires)
    if requires:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def backward(loss: Tensor) -> None:
    """Populate gradients of everything reachable from a scalar loss."""
    if loss.ndim != 0:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    # Iterative DFS post-order; recursion would overflow on long tapes.
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))

    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; also accepts matrix + row-vector bias."""
    if a.shape == b.shape:
        def back(gy):
            if a.requires_grad:
                _accumulate(a, gy)
            if b.requires_grad:
                _accumulate(b, gy)
        return _make(a.data + b.data, (a, b), back)

    if a.ndim == 2 and b.ndim == 1 and a.shape[1] == b.shape[0]:
        mat, vec = a, b
    elif b.ndim == 2 and a.ndim == 1 and b.shape[1] == a.shape[0]:
        mat, vec = b, a
    else:
        raise ShapeMismatch("add", a.shape, b.shape)

    def back_bias(gy):
        if mat.requires_grad:
            _accumulate(mat, gy)
        if vec.requires_grad:
            _accumulate(vec, gy.sum(axis=0))

    return _make(mat.data + vec.data, (mat, vec), back_bias)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatch("mul", a.shape, b.shape)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy * b.data)
        if b.requires_grad:
            _accumulate(b, gy * a.data)

    return _make(a.data * b.data, (a, b), back)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy * c)

    return _make(a.data * c, (a,), back)


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, neg(b))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for the (n,k)@(k,m), (k,)@(k,m) and (n,k)@(k,) cases."""
    ad, bd = a.data, b.data
    if a.ndim == 2 and b.ndim == 2:
        if a.shape[1] != b.shape[0]:
            raise ShapeMismatch("matmul", a.shape, b.shape)

        def back(gy):
            if a.requires_grad:
                _accumulate(a, gy @ bd.T)
            if b.requires_grad:
                _accumulate(b, ad.T @ gy)

        return _make(ad @ bd, (a, b), back)

    if a.ndim == 1 and b.ndim == 2:
        if a.shape[0] != b.shape[0]:
            raise ShapeMismatch("matmul", a.shape, b.shape)

        def back_vm(gy):
            if a.requires_grad:
                _accumulate(a, bd @ gy)
            if b.requires_grad:
                _accumulate(b, np.outer(ad, gy))

        return _make(ad @ bd, (a, b), back_vm)

    if a.ndim == 2 and b.ndim == 1:
        if a.shape[1] != b.shape[0]:
            raise ShapeMismatch("matmul", a.shape, b.shape)

        def back_mv(gy):
            if a.requires_grad:
                _accumulate(a, np.outer(gy, bd))
            if b.requires_grad:
                _accumulate(b, ad.T @ gy)

        return _make(ad @ bd, (a, b), back_mv)

    raise ShapeMismatch("matmul", a.shape, b.shape)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeMismatch("transpose", a.shape)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, np.ascontiguousarray(gy.T))

    return _make(np.ascontiguousarray(a.data.T), (a,), back)


# ---------------------------------------------------------------------------
# structure


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(parts)
    if not parts:
        raise ValueError("concat: empty input list")
    offsets = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def back(gy):
        for part, piece in zip(parts, np.split(gy, offsets, axis=axis)):
            if part.requires_grad:
                _accumulate(part, piece)

    return _make(np.concatenate([p.data for p in parts], axis=axis), parts, back)


def stack_rows(vectors: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length into a (n, d) matrix."""
    return concat([reshape(v, (1, v.shape[0])) for v in vectors], axis=0)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def back(gy):
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g[index] = gy
            _accumulate(a, g)

    return _make(np.ascontiguousarray(a.data[index]), (a,), back)


def gather_rows(a: Tensor, indices: Sequence[int]) -> Tensor:
    """Select rows of a 2-D tensor; duplicate indices sum in backward."""
    if a.ndim != 2:
        raise ShapeMismatch("gather_rows", a.shape)
    idx = np.asarray(indices, dtype=np.intp)

    def back(gy):
        if a.requires_grad:
            g = np.zeros_like(a.data)
            np.add.at(g, idx, gy)
            _accumulate(a, g)

    return _make(np.ascontiguousarray(a.data[idx]), (a,), back)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy.reshape(a.shape))

    return _make(a.data.reshape(shape), (a,), back)


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a: Tensor) -> Tensor:
    def back(gy):
        if a.requires_grad:
            _accumulate(a, K.relu_bw(a.data, gy))

    return _make(K.relu_fw(a.data), (a,), back)


def sigmoid(a: Tensor) -> Tensor:
    y = K.sigmoid_fw(a.data)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, K.sigmoid_bw(y, gy))

    return _make(y, (a,), back)


def tanh(a: Tensor) -> Tensor:
    y = K.tanh_fw(a.data)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, K.tanh_bw(y, gy))

    return _make(y, (a,), back)


def exp(a: Tensor) -> Tensor:
    y = K.exp_fw(a.data)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, K.exp_bw(y, gy))

    return _make(y, (a,), back)


def log(a: Tensor) -> Tensor:
    def back(gy):
        if a.requires_grad:
            _accumulate(a, K.log_bw(a.data, gy))

    return _make(K.log_fw(a.data), (a,), back)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip values into [lo, hi]; gradient is zero where clipping binds."""
    inside = (a.data >= lo) & (a.data <= hi)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy * inside)

    return _make(np.clip(a.data, lo, hi), (a,), back)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; on ties the gradient goes to the first operand."""
    if a.shape != b.shape:
        raise ShapeMismatch("maximum", a.shape, b.shape)
    take_a = a.data >= b.data

    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy * take_a)
        if b.requires_grad:
            _accumulate(b, gy * ~take_a)

    return _make(np.maximum(a.data, b.data), (a, b), back)


def absval(a: Tensor) -> Tensor:
    sign = np.sign(a.data)

    def back(gy):
        if a.requires_grad:
            _accumulate(a, gy * sign)

    return _make(np.abs(a.data), (a,), back)


# ---------------------------------------------------------------------------
# reductions


def sum_axis(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    def back(gy):
        if not a.requires_grad:
            return
        if axis is None:
            _accumulate(a, np.full(a.shape, float(gy)))
        else:
            g = gy if keepdims else np.expand_dims(gy, axis)
            _accumulate(a, np.broadcast_to(g, a.shape))

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), back)


def mean_axis(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    return scale(sum_axis(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------------------
# normalizations and similarity


def _to_rows(data: np.ndarray, axis: int) -> tuple[np.ndarray, tuple[int, ...]]:
    moved = np.moveaxis(data, axis, -1)
    return np.ascontiguousarray(moved.reshape(-1, moved.shape[-1])), moved.shape


def _from_rows(rows: np.ndarray, moved_shape, axis: int) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(rows.reshape(moved_shape), -1, axis))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along `axis` (max subtraction)."""
    if a.shape[axis] == 0:
        raise ShapeMismatch("softmax", a.shape)
    rows, moved_shape = _to_rows(a.data, axis)
    y_rows = K.softmax_rows_fw(rows)
    y = _from_rows(y_rows, moved_shape, axis)

    def back(gy):
        if a.requires_grad:
            gy_rows, _ = _to_rows(gy, axis)
            gx_rows = K.softmax_rows_bw(y_rows, gy_rows)
            _accumulate(a, _from_rows(gx_rows, moved_shape, axis))

    return _make(y, (a,), back)


def layer_norm(a: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize the last axis to zero mean / unit variance (no affine)."""
    rows = np.ascontiguousarray(a.data.reshape(-1, a.shape[-1]))
    y_rows, inv_std = K.layer_norm_rows_fw(rows, eps)

    def back(gy):
        if a.requires_grad:
            gy_rows = np.ascontiguousarray(gy.reshape(rows.shape))
            gx = K.layer_norm_rows_bw(y_rows, inv_std, gy_rows)
            _accumulate(a, gx.reshape(a.shape))

    return _make(y_rows.reshape(a.shape), (a,), back)


def cosine_similarity(a: Tensor, b: Tensor, eps: float = COSINE_EPS) -> Tensor:
    """cos(a, b) = a.b / max(|a||b|, eps), rowwise for 2-D inputs.

    The eps floor makes the zero-vector case well defined (similarity 0)
    and keeps the gradient finite there.
    """
    if a.shape != b.shape:
        raise ShapeMismatch("cosine_similarity", a.shape, b.shape)
    vector_mode = a.ndim == 1
    av = a.data.reshape(1, -1) if vector_mode else a.data
    bv = b.data.reshape(1, -1) if vector_mode else b.data
    if av.ndim != 2:
        raise ShapeMismatch("cosine_similarity", a.shape, b.shape)

    dots = (av * bv).sum(axis=1)
    na = np.sqrt((av * av).sum(axis=1))
    nb = np.sqrt((bv * bv).sum(axis=1))
    denom = np.maximum(na * nb, eps)
    cos = dots / denom
    out = cos[0].reshape(()) if vector_mode else cos

    def back(gy):
        gyv = np.asarray(gy, dtype=np.float64).reshape(-1, 1)
        live = (na * nb > eps).reshape(-1, 1)
        d = denom.reshape(-1, 1)
        c = cos.reshape(-1, 1)
        # Below the floor the denominator is a constant, so only the dot
        # product contributes.
        na2 = np.where(live, (na * na).reshape(-1, 1), 1.0)
        nb2 = np.where(live, (nb * nb).reshape(-1, 1), 1.0)
        if a.requires_grad:
            ga = gyv * np.where(live, bv / d - c * av / na2, bv / d)
            _accumulate(a, ga.reshape(a.shape))
        if b.requires_grad:
            gb = gyv * np.where(live, av / d - c * bv / nb2, av / d)
            _accumulate(b, gb.reshape(b.shape))

    return _make(out, (a, b), back)


# ---------------------------------------------------------------------------
# composites


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; the caller only invokes this in training mode."""
    if rate <= 0.0:
        return a
    keep = 1.0 - rate
    mask = (rng.random(a.shape) < keep) / keep
    return mul(a, constant(mask))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w (+ b). Weights are stored (in, out) so no transpose is needed."""
    y = matmul(x, w)
    return y if b is None else add(y, b)


def bce_loss(probs: Iterable[Tensor], labels: Iterable[int],
             eps: float = 1e-7) -> Tensor:
    """Summed binary cross-entropy over scalar probabilities.

    Probabilities are clamped into [eps, 1-eps] before the logs, so a
    saturated sigmoid cannot produce infinities.
    """
    probs = list(probs)
    labels = [int(y) for y in labels]
    if len(probs) != len(labels):
        raise ValueError("bce_loss: probs and labels differ in length")
    if any(y not in (0, 1) for y in labels):
        raise ValueError("bce_loss: labels must be 0 or 1")
    p = concat([reshape(t, (1,)) for t in probs], axis=0)
    p = clamp(p, eps, 1.0 - eps)
    yv = constant(np.asarray(labels, dtype=np.float64))
    one_minus_y = constant(1.0 - yv.data)
    ones = constant(np.ones(len(labels)))
    term = add(mul(yv, log(p)), mul(one_minus_y, log(sub(ones, p))))
    return neg(sum_axis(term))
