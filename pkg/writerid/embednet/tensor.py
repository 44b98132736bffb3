"""A small reverse-mode automatic differentiation engine over numpy arrays."""

import threading
from contextlib import contextmanager
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, ExitCode, WriterIdError


class UsageError(WriterIdError):
    """Raised when the engine is driven out of order, e.g. backward without a recorded forward."""
    exit_code = ExitCode.EMBEDDER


_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, 'grad_enabled', True)


@contextmanager
def no_grad():
    """Disable graph recording in the current thread."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An array value with an optional gradient and the closure that propagates it to its parents.

    Attributes:
        data (numpy.ndarray): float values.
        grad (numpy.ndarray): accumulated gradient of the same shape, ``None`` until backward.
        requires_grad (bool): whether gradients flow to this tensor.
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, parents: Sequence['Tensor'] = (),
                 backward: Optional[Callable[[np.ndarray], None]] = None):
        data = np.asarray(data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad})'

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Propagate ``d self / d node`` into ``grad`` of every node of the recorded graph.

        Raises:
            UsageError: nothing was recorded, or ``self`` is not a scalar and no seed gradient was given.
        """
        if self._backward is None and not self.requires_grad:
            raise UsageError('backward() called on a tensor with no recorded forward graph')
        if grad is None:
            if self.data.size != 1:
                raise UsageError('backward() without a seed gradient requires a scalar tensor')
            grad = np.ones_like(self.data)

        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node.requires_grad and node._backward is None:
                node._accumulate(node_grad)
            if node._backward is not None:
                for parent, parent_grad in zip(node._parents, node._backward(node_grad)):
                    if parent_grad is None:
                        continue
                    if id(parent) in grads:
                        grads[id(parent)] = grads[id(parent)] + parent_grad
                    else:
                        grads[id(parent)] = parent_grad

    # arithmetic

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    def sum(self, axis=None):
        return sum_(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    if is_grad_enabled() and any(p.requires_grad or p._backward is not None for p in parents):
        return Tensor(data, parents=parents, backward=backward)
    return Tensor(data)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def square(a: Tensor) -> Tensor:
    return _make(a.data ** 2, (a,), lambda g: (2.0 * a.data * g,))


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return _make(out, (a,), lambda g: (0.5 * g / out,))


def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    return _make(np.where(active, a.data, 0.0), (a,), lambda g: (g * active,))


def sum_(a: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)
    return _make(np.asarray(a.data.sum(axis=axis)), (a,), backward)


def mean(a: Tensor, axis=None) -> Tensor:
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(sum_(a, axis), 1.0 / count)


def reshape(a: Tensor, shape) -> Tensor:
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def take(a: Tensor, index) -> Tensor:
    def backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)
    return _make(a.data[index], (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f'Cannot multiply shapes {a.shape} and {b.shape}')
    return _make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of ``x`` ``(N, C, H, W)`` with ``weight`` ``(O, C, kh, kw)``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1]:
        raise DimensionError(f'conv2d input {x.shape} does not match kernels {weight.shape}')
    out_channels, _, kh, kw = weight.shape
    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    if padded.shape[2] < kh or padded.shape[3] < kw:
        raise DimensionError(f'conv2d input {x.shape} is smaller than its {kh}x{kw} kernel')
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    parents = [x, weight]
    if bias is not None:
        out = out + bias.data[None, :, None, None]
        parents.append(bias)

    def backward(g):
        grad_weight = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                grad_padded[:, :, i:i + stride * (out_h - 1) + 1:stride, j:j + stride * (out_w - 1) + 1:stride] += \
                    np.einsum('nohw,oc->nchw', g, weight.data[:, :, i, j])
        height, width = x.shape[2], x.shape[3]
        grads = [grad_padded[:, :, padding:padding + height, padding:padding + width], grad_weight]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)
    return _make(np.ascontiguousarray(out), parents, backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """Average ``(N, C, H, W)`` over its spatial axes into ``(N, C)``."""
    return mean(x, axis=(2, 3))
