"""
Tensor with Reverse-Mode Autodiff

A numpy-backed n-dimensional array that records the operations producing it
and can propagate gradients back through them.

Every op builds its output with ``make_result(data, parents, backward)``.
The backward closure receives the output gradient and pushes the chain-rule
contribution into each parent with ``accumulate_grad``. ``Tensor.backward``
orders the recorded graph topologically (iteratively, so deep graphs do not
hit the recursion limit) and runs the closures in reverse.

Gradients on leaves accumulate across calls until cleared; gradients on
intermediate nodes are released once they have been propagated.

Usage:
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    loss = (x * x).sum()
    loss.backward()
    x.grad  # array([2., 4.])
"""

from contextlib import contextmanager
import threading
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ArgumentError, DimensionError

DEFAULT_DTYPE = np.float32

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def _as_array(value, dtype=None) -> np.ndarray:
    array = np.asarray(value)
    if dtype is not None:
        return array.astype(dtype, copy=False)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(DEFAULT_DTYPE)
    return array


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def accumulate_grad(tensor: "Tensor", grad: np.ndarray) -> None:
    if not tensor.requires_grad:
        return
    grad = unbroadcast(np.asarray(grad), tensor.shape).astype(tensor.dtype, copy=False)
    if tensor.grad is None:
        tensor.grad = np.array(grad, copy=True)
    else:
        tensor.grad = tensor.grad + grad


def make_result(
    data: np.ndarray,
    parents: Sequence["Tensor"],
    backward: Callable[[np.ndarray], None],
    op: str = "",
) -> "Tensor":
    """Wrap an op's output, recording the graph edge when a parent needs grads."""
    needs_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs_grad)
    if needs_grad:
        out._parents = tuple(parents)
        out._backward = backward
        out._op = op
    return out


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        isinstance(item, (int, np.integer, slice)) or item is None or item is Ellipsis
        for item in items
    )


class Tensor:
    """n-dimensional real array with optional gradient tracking."""

    # ndarray (op) Tensor must defer to the Tensor's reflected operator.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data: np.ndarray = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._op = ""

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    def _lift(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    # ------------------------------------------------------------------
    # Backpropagation
    # ------------------------------------------------------------------

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
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
        return order

    def backward(self) -> None:
        """Propagate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if self.data.size != 1:
            raise ArgumentError(f"backward() needs a scalar loss, got shape {self.shape}")

        order = self._topological_order()
        for node in order:
            if node._parents:
                node.grad = None

        seed = np.ones_like(self.data)
        self.grad = seed if (self._parents or self.grad is None) else self.grad + seed

        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            if node is not self:
                node.grad = None

    def zero_grad(self) -> None:
        self.grad = None

    # ------------------------------------------------------------------
    # Elementwise arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            accumulate_grad(self, g)
            accumulate_grad(other, g)

        return make_result(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            accumulate_grad(self, g)
            accumulate_grad(other, -g)

        return make_result(self.data - other.data, (self, other), backward, "sub")

    def __rsub__(self, other) -> "Tensor":
        return self._lift(other) - self

    def __mul__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            accumulate_grad(self, g * other.data)
            accumulate_grad(other, g * self.data)

        return make_result(self.data * other.data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            accumulate_grad(self, g / other.data)
            accumulate_grad(other, -g * self.data / (other.data * other.data))

        return make_result(self.data / other.data, (self, other), backward, "div")

    def __rtruediv__(self, other) -> "Tensor":
        return self._lift(other) / self

    def __neg__(self) -> "Tensor":
        def backward(g):
            accumulate_grad(self, -g)

        return make_result(-self.data, (self,), backward, "neg")

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise ArgumentError("only scalar exponents are supported")

        def backward(g):
            accumulate_grad(self, g * exponent * self.data ** (exponent - 1))

        return make_result(self.data**exponent, (self,), backward, "pow")

    def __matmul__(self, other) -> "Tensor":
        other = self._lift(other)
        if self.ndim < 2 or other.ndim < 2:
            raise DimensionError(f"matmul needs rank >= 2 operands, got {self.shape} @ {other.shape}")
        if self.shape[-1] != other.shape[-2]:
            raise DimensionError(f"matmul inner extents differ: {self.shape} @ {other.shape}")

        def backward(g):
            if self.requires_grad:
                accumulate_grad(self, g @ np.swapaxes(other.data, -1, -2))
            if other.requires_grad:
                accumulate_grad(other, np.swapaxes(self.data, -1, -2) @ g)

        return make_result(self.data @ other.data, (self, other), backward, "matmul")

    def __rmatmul__(self, other) -> "Tensor":
        return self._lift(other) @ self

    # ------------------------------------------------------------------
    # Unary functions
    # ------------------------------------------------------------------

    def exp(self) -> "Tensor":
        out_data = np.exp(self.data)

        def backward(g):
            accumulate_grad(self, g * out_data)

        return make_result(out_data, (self,), backward, "exp")

    def log(self) -> "Tensor":
        def backward(g):
            accumulate_grad(self, g / self.data)

        return make_result(np.log(self.data), (self,), backward, "log")

    def sqrt(self) -> "Tensor":
        out_data = np.sqrt(self.data)

        def backward(g):
            accumulate_grad(self, g * 0.5 / out_data)

        return make_result(out_data, (self,), backward, "sqrt")

    def abs(self) -> "Tensor":
        def backward(g):
            accumulate_grad(self, g * np.sign(self.data))

        return make_result(np.abs(self.data), (self,), backward, "abs")

    def relu(self) -> "Tensor":
        mask = self.data > 0

        def backward(g):
            accumulate_grad(self, g * mask)

        return make_result(self.data * mask, (self,), backward, "relu")

    def sigmoid(self) -> "Tensor":
        out_data = 0.5 * (np.tanh(0.5 * self.data) + 1.0)

        def backward(g):
            accumulate_grad(self, g * out_data * (1.0 - out_data))

        return make_result(out_data.astype(self.dtype, copy=False), (self,), backward, "sigmoid")

    def tanh(self) -> "Tensor":
        out_data = np.tanh(self.data)

        def backward(g):
            accumulate_grad(self, g * (1.0 - out_data * out_data))

        return make_result(out_data, (self,), backward, "tanh")

    def clip(self, low: float, high: float) -> "Tensor":
        inside = (self.data >= low) & (self.data <= high)

        def backward(g):
            accumulate_grad(self, g * inside)

        return make_result(np.clip(self.data, low, high), (self,), backward, "clip")

    # ------------------------------------------------------------------
    # Reductions
    # ------------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            accumulate_grad(self, np.broadcast_to(g, self.shape))

        return make_result(
            np.asarray(self.data.sum(axis=axis, keepdims=keepdims)), (self,), backward, "sum"
        )

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # ------------------------------------------------------------------
    # Shape manipulation
    # ------------------------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        def backward(g):
            accumulate_grad(self, g.reshape(self.shape))

        return make_result(self.data.reshape(shape), (self,), backward, "reshape")

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))

        def backward(g):
            accumulate_grad(self, g.transpose(inverse))

        return make_result(self.data.transpose(axes), (self,), backward, "transpose")

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index) -> "Tensor":
        basic = _is_basic_index(index)

        def backward(g):
            full = np.zeros_like(self.data)
            if basic:
                full[index] += g
            else:
                np.add.at(full, index, g)
            accumulate_grad(self, full)

        return make_result(self.data[index], (self,), backward, "index")

    def pad(self, pad_width: Sequence[Tuple[int, int]]) -> "Tensor":
        """Zero padding with numpy ``pad_width`` semantics."""
        pad_width = tuple((int(a), int(b)) for a, b in pad_width)
        region = tuple(slice(a, a + n) for (a, _), n in zip(pad_width, self.shape))

        def backward(g):
            accumulate_grad(self, g[region])

        return make_result(np.pad(self.data, pad_width), (self,), backward, "pad")


ArrayLike = Union[Tensor, np.ndarray, float, int]


def as_tensor(value: ArrayLike, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis_n = axis % tensors[0].ndim
    sizes = [t.shape[axis_n] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, bounds[:-1], bounds[1:]):
            index = [slice(None)] * g.ndim
            index[axis_n] = slice(int(start), int(stop))
            accumulate_grad(t, g[tuple(index)])

    data = np.concatenate([t.data for t in tensors], axis=axis_n)
    return make_result(data, tensors, backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        for i, t in enumerate(tensors):
            accumulate_grad(t, np.take(g, i, axis=axis))

    data = np.stack([t.data for t in tensors], axis=axis)
    return make_result(data, tensors, backward, "stack")
