"""Tape-based reverse-mode automatic differentiation over numpy float64 arrays.

Every operation records its parents and a vector-Jacobian product (vjp) closure.
The vjp closures are themselves written in terms of recorded operations, so a
backward pass run with ``create_graph=True`` yields gradients that are ordinary
graph nodes — this is what powers the double-backprop needed by the WGAN
gradient penalty.  Tapes are implicit: the graph is whatever is reachable from
the output node and is freed once the node goes out of scope.
"""

from __future__ import annotations

import contextlib
import itertools

import numpy as np

from .errors import ShapeError

_counter = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the context."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


@contextlib.contextmanager
def enable_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = True
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A float64 array plus optional gradient bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp", "_id")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None  # numpy array, filled by backward() on leaves
        self._parents = ()
        self._vjp = None
        self._id = next(_counter)

    # -- introspection -----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -np.asarray(other, dtype=np.float64))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjp) -> Tensor:
    """Create an op output, recording parents only when the tape is live."""
    record = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=record)
    if record:
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(g: Tensor, shape) -> Tensor:
    """Reduce gradient ``g`` back to ``shape`` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    ndiff = g.ndim - len(shape)
    axes = tuple(range(ndiff))
    axes += tuple(
        i + ndiff for i, n in enumerate(shape) if n == 1 and g.shape[i + ndiff] != 1
    )
    out = sum_(g, axis=axes, keepdims=True) if axes else g
    return reshape(out, shape)


# -- primitive operations --------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(mul(g, b), a.shape), _unbroadcast(mul(g, a), b.shape)),
    )


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.shape} @ {b.shape}")
    return _make(
        a.data @ b.data,
        (a, b),
        lambda g: (matmul(g, transpose(b)), matmul(transpose(a), g)),
    )


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.T, (a,), lambda g: (transpose(g),))


def power(a, p) -> Tensor:
    a = as_tensor(a)
    p = float(p)
    return _make(
        a.data ** p,
        (a,),
        lambda g: (mul(g, mul(power(a, p - 1.0), p)),),
    )


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.exp(a.data), (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, out),)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (mul(g, power(a, -1.0)),))


def sqrt_safe(a, floor: float = 1e-12) -> Tensor:
    """Square root whose vjp clamps the denominator; grad at 0 is finite (0 when
    the inner gradient also vanishes, e.g. a norm of an identically-zero vector)."""
    a = as_tensor(a)
    root = np.sqrt(a.data)
    denom = Tensor(2.0 * np.maximum(root, floor))
    out = _make(root, (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, power(denom, -1.0)),)
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.tanh(a.data), (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, add(1.0, mul(mul(out, out), -1.0))),)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _make(1.0 / (1.0 + np.exp(-a.data)), (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, mul(out, add(1.0, mul(out, -1.0)))),)
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = Tensor((a.data > 0).astype(np.float64))
    return _make(a.data * mask.data, (a,), lambda g: (mul(g, mask),))


def leaky_relu(a, alpha: float = 0.2) -> Tensor:
    a = as_tensor(a)
    slope = Tensor(np.where(a.data > 0, 1.0, alpha))
    return _make(a.data * slope.data, (a,), lambda g: (mul(g, slope),))


_SELU_LAMBDA = 1.0507009873554805
_SELU_ALPHA = 1.6732632423543772


def selu(a) -> Tensor:
    a = as_tensor(a)
    pos = a.data > 0
    out_data = _SELU_LAMBDA * np.where(pos, a.data, _SELU_ALPHA * np.expm1(a.data))
    # first derivative only; SeLU is excluded from second-order paths
    deriv = Tensor(_SELU_LAMBDA * np.where(pos, 1.0, _SELU_ALPHA * np.exp(a.data)))
    return _make(out_data, (a,), lambda g: (mul(g, deriv),))


def softmax(a) -> Tensor:
    """Row-wise softmax over the last axis."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = _make(e / e.sum(axis=-1, keepdims=True), (a,), None)
    if out._parents:
        def vjp(g):
            go = mul(g, out)
            return (add(go, mul(out, mul(sum_(go, axis=-1, keepdims=True), -1.0))),)
        out._vjp = vjp
    return out


def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        gd = g
        if not keepdims and axis is not None:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            shp = list(g.shape)
            for ax in sorted(ax % a.ndim for ax in axes):
                shp.insert(ax, 1)
            gd = reshape(g, tuple(shp))
        elif axis is None and not keepdims:
            gd = reshape(g, (1,) * a.ndim)
        return (broadcast_to(gd, a.shape),)

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), vjp)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    return _make(
        np.broadcast_to(a.data, shape).copy(),
        (a,),
        lambda g: (_unbroadcast(g, a.shape),),
    )


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a,), lambda g: (reshape(g, a.shape),))


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        buf = np.zeros(a.shape)
        np.add.at(buf, idx, g.data)
        return (Tensor(buf),)

    return _make(a.data[idx], (a,), vjp)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        grads = []
        for i in range(len(tensors)):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(int(offsets[i]), int(offsets[i + 1]))
            grads.append(getitem(g, tuple(sl)))
        return tuple(grads)

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), vjp)


def square(a) -> Tensor:
    a = as_tensor(a)
    return mul(a, a)


def rownorm(a) -> Tensor:
    """Per-row Euclidean norm of a 2-D tensor; shape (n, 1)."""
    return sqrt_safe(sum_(square(a), axis=1, keepdims=True))


# -- backward machinery ----------------------------------------------------

def _toposort(root: Tensor):
    seen = set()
    order = []
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        order.append(node)
        stack.extend(node._parents)
    order.sort(key=lambda t: t._id, reverse=True)
    return order


def grad(output: Tensor, wrt, create_graph: bool = False, seed=None):
    """Gradients of scalar ``output`` w.r.t. the tensors in ``wrt``.

    With ``create_graph=True`` the returned gradients are themselves graph
    nodes, enabling higher-order differentiation.
    """
    if output.size != 1 and seed is None:
        raise ShapeError("grad() needs a scalar output (or an explicit seed)")
    grads = {id(output): as_tensor(seed) if seed is not None else Tensor(np.ones(output.shape))}
    ctx = enable_grad() if create_graph else no_grad()
    with ctx:
        for node in _toposort(output):
            g = grads.get(id(node))
            if g is None or node._vjp is None:
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = add(grads[id(parent)], pg)
                else:
                    grads[id(parent)] = pg
        out = []
        for w in wrt:
            gw = grads.get(id(w))
            out.append(gw if gw is not None else Tensor(np.zeros(w.shape)))
    return out


def backward(loss: Tensor, params=None):
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf
    (or of the given ``params``)."""
    if loss.size != 1:
        raise ShapeError("backward() expects a scalar loss")
    if params is None:
        params = [
            n for n in _toposort(loss) if n.requires_grad and n._vjp is None
        ]
    gs = grad(loss, params, create_graph=False)
    for p, g in zip(params, gs):
        if p.grad is None:
            p.grad = g.data.copy()
        else:
            p.grad = p.grad + g.data
