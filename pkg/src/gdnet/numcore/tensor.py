"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and, when gradients are requested, records the
producing operation on a define-by-run tape: each op closes over its saved
activations and knows how to push a vector-Jacobian product back to its
parents.  backward() replays the reachable tape in reverse creation order,
which is a valid topological order because inputs always exist before the
op that consumes them.
"""

from __future__ import annotations

import itertools

import numpy as np

_node_ids = itertools.count()


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """N-d array with optional gradient tracking.

    4-d feature maps follow the NCHW convention throughout the package.
    """

    def __init__(self, data, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._backward = None
        self._parents = ()
        self._nid = next(_node_ids)

    # -- basic introspection ------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- tape plumbing ------------------------------------------------------

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            # Copy on first write: the same gradient array may be handed to
            # several parents, and later in-place zeroing must not alias.
            self.grad = np.array(g)
        else:
            self.grad = self.grad + g

    def backward(self, grad=None, free_graph: bool = True):
        """Populate .grad on every tensor this output depends on.

        Repeated calls without zeroing accumulate gradients additively.
        """
        if self._backward is None and not self.requires_grad:
            raise ValueError("backward() on a tensor that is detached from the tape")
        if grad is None:
            if self.data.size != 1:
                raise ValueError(
                    f"implicit backward() needs a scalar, got shape {self.data.shape}"
                )
            grad = np.ones_like(self.data)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))

        # Reachable recording nodes, visited once each.
        seen = set()
        nodes = []
        stack = [self]
        while stack:
            t = stack.pop()
            if id(t) in seen:
                continue
            seen.add(id(t))
            if t._backward is not None:
                nodes.append(t)
                stack.extend(t._parents)
        # Reverse creation order: every consumer runs before its producer.
        nodes.sort(key=lambda t: t._nid, reverse=True)
        for t in nodes:
            t._backward()
        if free_graph:
            for t in nodes:
                t._backward = None
                t._parents = ()

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        return add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, self._coerce(other))

    def __rsub__(self, other):
        return sub(self._coerce(other), self)

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, self._coerce(-1.0))

    def __matmul__(self, other):
        return matmul_batched(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)

    def sum(self):
        return sum_all(self)

    def mean(self):
        return mean_all(self)


class Parameter(Tensor):
    """Learnable tensor with a hierarchical path name, bound at model build."""

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
        self.name = ""
        self.trainable = True


def _record(out: Tensor, parents: tuple, backward_fn):
    """Attach a tape node to `out` if any parent wants gradients."""
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


# -- elementwise ops ----------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data)

    def _bw():
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad, b.data.shape))

    return _record(out, (a, b), _bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data - b.data)

    def _bw():
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-out.grad, b.data.shape))

    return _record(out, (a, b), _bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data)

    def _bw():
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad * a.data, b.data.shape))

    return _record(out, (a, b), _bw)


def pow_const(a: Tensor, exponent: float) -> Tensor:
    out = Tensor(a.data ** exponent)

    def _bw():
        a._accumulate(out.grad * exponent * a.data ** (exponent - 1))

    return _record(out, (a,), _bw)


def absolute(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data))

    def _bw():
        a._accumulate(out.grad * np.sign(a.data))

    return _record(out, (a,), _bw)


# -- shape ops ----------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))

    def _bw():
        a._accumulate(out.grad.reshape(a.data.shape))

    return _record(out, (a,), _bw)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    out = Tensor(a.data.transpose(axes))
    inverse = tuple(np.argsort(axes))

    def _bw():
        a._accumulate(out.grad.transpose(inverse))

    return _record(out, (a,), _bw)


def concat(tensors, axis: int) -> Tensor:
    tensors = list(tensors)
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def _bw():
        pieces = np.split(out.grad, splits, axis=axis)
        for t, g in zip(tensors, pieces):
            if t.requires_grad:
                t._accumulate(g)

    return _record(out, tuple(tensors), _bw)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = Tensor(a.data[index].copy())

    def _bw():
        g = np.zeros_like(a.data)
        g[index] = out.grad
        a._accumulate(g)

    return _record(out, (a,), _bw)


def roll2d(a: Tensor, shift_h: int, shift_w: int, axes=(2, 3)) -> Tensor:
    out = Tensor(np.roll(a.data, (shift_h, shift_w), axis=axes))

    def _bw():
        a._accumulate(np.roll(out.grad, (-shift_h, -shift_w), axis=axes))

    return _record(out, (a,), _bw)


# -- reductions ----------------------------------------------------------------


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(np.asarray(a.data.sum(), dtype=a.data.dtype))

    def _bw():
        a._accumulate(np.broadcast_to(out.grad, a.data.shape))

    return _record(out, (a,), _bw)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    out = Tensor(np.asarray(a.data.mean(), dtype=a.data.dtype))

    def _bw():
        a._accumulate(np.broadcast_to(out.grad / n, a.data.shape))

    return _record(out, (a,), _bw)


# -- matmul ---------------------------------------------------------------------


def matmul_batched(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product on the trailing two dims, broadcasting leading dims."""
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ValueError(
            f"matmul inner dims differ: {a.data.shape} vs {b.data.shape}"
        )
    out = Tensor(np.matmul(a.data, b.data))

    def _bw():
        g = out.grad
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a._accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.data.shape))

    return _record(out, (a, b), _bw)
