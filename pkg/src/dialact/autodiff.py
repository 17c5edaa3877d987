"""Reverse-mode automatic differentiation over small dense float64 tensors.

Values are numpy arrays of rank 0, 1 or 2. Graphs are built eagerly: every
operation computes its result immediately and records a backward closure.
Calling :func:`backward` on a scalar node then fills the ``grad`` slot of
every parameter node that contributed to it, summing over fan-out.

This is deliberately unvectorized across sequence steps: recurrent nets are
unrolled one cell at a time, which keeps the engine tiny and easy to verify
against finite differences.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "Node",
    "ParamStore",
    "backward",
    "concat",
    "constant",
    "dropout",
    "grad_check",
    "log",
    "log_softmax",
    "logsumexp",
    "matmul",
    "mean_over_rows",
    "no_grad",
    "one_hot",
    "parameter",
    "pick",
    "pick2",
    "reshape",
    "row",
    "rows",
    "sigmoid",
    "softmax",
    "stack",
    "sum_all",
    "tanh",
    "zeros",
]

_GRAD_ENABLED = True


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (values only, no backward)."""
    global _GRAD_ENABLED
    saved = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = saved


class Node:
    """One value in the computation graph.

    ``value`` is always a float64 ndarray of rank <= 2. ``grad`` is filled by
    :func:`backward` and has the same shape as ``value``.
    """

    __slots__ = ("value", "grad", "parents", "_backward", "requires_grad")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["Node", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
        requires_grad: bool = False,
    ):
        self.value = value
        self.grad: np.ndarray | None = None
        self.parents = parents
        self._backward = backward
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; scalars and arrays are wrapped as constants.
    def __add__(self, other) -> "Node":
        return add(self, _wrap(other))

    def __radd__(self, other) -> "Node":
        return add(_wrap(other), self)

    def __sub__(self, other) -> "Node":
        return sub(self, _wrap(other))

    def __rsub__(self, other) -> "Node":
        return sub(_wrap(other), self)

    def __mul__(self, other) -> "Node":
        return mul(self, _wrap(other))

    def __rmul__(self, other) -> "Node":
        return mul(_wrap(other), self)

    def __matmul__(self, other) -> "Node":
        return matmul(self, _wrap(other))

    def __neg__(self) -> "Node":
        return scale(self, -1.0)

    def __truediv__(self, c: float) -> "Node":
        return scale(self, 1.0 / float(c))


def _as_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim > 2:
        raise ValueError(f"tensors of rank {arr.ndim} are not supported (max 2)")
    return arr


def constant(value) -> Node:
    """A leaf node that never receives a gradient."""
    return Node(_as_array(value))


def parameter(value) -> Node:
    """A trainable leaf node; :func:`backward` accumulates into its grad."""
    return Node(_as_array(value), requires_grad=True)


def zeros(*shape: int) -> Node:
    return Node(np.zeros(shape, dtype=np.float64))


def one_hot(index: int, size: int) -> Node:
    v = np.zeros(size, dtype=np.float64)
    v[index] = 1.0
    return Node(v)


def _wrap(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _make(value: np.ndarray, parents: tuple[Node, ...], backward) -> Node:
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        return Node(value, parents, backward, requires_grad=True)
    return Node(value)


def _accumulate(node: Node, g: np.ndarray) -> None:
    if node.grad is None:
        node.grad = np.array(g, dtype=np.float64)
    else:
        node.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------


def matmul(a: Node, b: Node) -> Node:
    av, bv = a.value, b.value
    if av.ndim == 0 or bv.ndim == 0 or av.shape[-1] != bv.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {av.shape} @ {bv.shape}")
    out = av @ bv

    def bw(g: np.ndarray) -> None:
        if av.ndim == 2 and bv.ndim == 2:
            if a.requires_grad:
                _accumulate(a, g @ bv.T)
            if b.requires_grad:
                _accumulate(b, av.T @ g)
        elif av.ndim == 2 and bv.ndim == 1:
            if a.requires_grad:
                _accumulate(a, np.outer(g, bv))
            if b.requires_grad:
                _accumulate(b, av.T @ g)
        elif av.ndim == 1 and bv.ndim == 2:
            if a.requires_grad:
                _accumulate(a, bv @ g)
            if b.requires_grad:
                _accumulate(b, np.outer(av, g))
        else:  # vector . vector -> scalar
            if a.requires_grad:
                _accumulate(a, g * bv)
            if b.requires_grad:
                _accumulate(b, g * av)

    return _make(out, (a, b), bw)


def add(a: Node, b: Node) -> Node:
    try:
        out = a.value + b.value
    except ValueError:
        raise ValueError(f"add: incompatible shapes {a.value.shape} + {b.value.shape}") from None

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.value.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.value.shape))

    return _make(out, (a, b), bw)


def sub(a: Node, b: Node) -> Node:
    try:
        out = a.value - b.value
    except ValueError:
        raise ValueError(f"sub: incompatible shapes {a.value.shape} - {b.value.shape}") from None

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.value.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g, b.value.shape))

    return _make(out, (a, b), bw)


def mul(a: Node, b: Node) -> Node:
    """Elementwise product (numpy broadcasting rules)."""
    av, bv = a.value, b.value
    try:
        out = av * bv
    except ValueError:
        raise ValueError(f"mul: incompatible shapes {av.shape} * {bv.shape}") from None

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * bv, av.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * av, bv.shape))

    return _make(out, (a, b), bw)


def scale(a: Node, c: float) -> Node:
    c = float(c)
    out = a.value * c

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * c)

    return _make(out, (a,), bw)


def sigmoid(a: Node) -> Node:
    av = a.value
    e = np.exp(-np.abs(av))
    out = np.where(av >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * out * (1.0 - out))

    return _make(out, (a,), bw)


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * (1.0 - out * out))

    return _make(out, (a,), bw)


def exp(a: Node) -> Node:
    out = np.exp(a.value)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * out)

    return _make(out, (a,), bw)


def log(a: Node) -> Node:
    out = np.log(a.value)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g / a.value)

    return _make(out, (a,), bw)


def softmax(a: Node) -> Node:
    """Softmax over a vector; output sums to 1."""
    av = a.value
    if av.ndim != 1:
        raise ValueError(f"softmax: expected a vector, got shape {av.shape}")
    e = np.exp(av - av.max())
    out = e / e.sum()

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, out * (g - g @ out))

    return _make(out, (a,), bw)


def log_softmax(a: Node) -> Node:
    av = a.value
    if av.ndim != 1:
        raise ValueError(f"log_softmax: expected a vector, got shape {av.shape}")
    shifted = av - av.max()
    out = shifted - np.log(np.exp(shifted).sum())
    p = np.exp(out)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g - p * g.sum())

    return _make(out, (a,), bw)


def logsumexp(a: Node, axis: int | None = None) -> Node:
    """log(sum(exp(x))) over the whole tensor (axis=None) or one matrix axis."""
    av = a.value
    if axis is None:
        m = av.max()
        e = np.exp(av - m)
        s = e.sum()
        out = np.asarray(m + np.log(s))
        w = e / s

        def bw(g: np.ndarray) -> None:
            if a.requires_grad:
                _accumulate(a, g * w)

    else:
        if av.ndim != 2 or axis not in (0, 1):
            raise ValueError(f"logsumexp: axis={axis} invalid for shape {av.shape}")
        m = av.max(axis=axis, keepdims=True)
        e = np.exp(av - m)
        s = e.sum(axis=axis, keepdims=True)
        out = (m + np.log(s)).reshape(av.shape[1 - axis])
        w = e / s

        def bw(g: np.ndarray) -> None:
            if a.requires_grad:
                gg = np.expand_dims(g, axis)
                _accumulate(a, gg * w)

    return _make(out, (a,), bw)


def concat(nodes: Sequence[Node]) -> Node:
    """Concatenate vectors into one vector."""
    nodes = tuple(nodes)
    if not nodes:
        raise ValueError("concat: empty input")
    for n in nodes:
        if n.value.ndim != 1:
            raise ValueError(f"concat: expected vectors, got shape {n.value.shape}")
    out = np.concatenate([n.value for n in nodes])
    sizes = [n.value.shape[0] for n in nodes]

    def bw(g: np.ndarray) -> None:
        offset = 0
        for n, k in zip(nodes, sizes):
            if n.requires_grad:
                _accumulate(n, g[offset : offset + k])
            offset += k

    return _make(out, nodes, bw)


def stack(nodes: Sequence[Node]) -> Node:
    """Stack scalars into a vector, or equal-length vectors into matrix rows."""
    nodes = tuple(nodes)
    if not nodes:
        raise ValueError("stack: empty input")
    out = np.stack([n.value for n in nodes])

    def bw(g: np.ndarray) -> None:
        for i, n in enumerate(nodes):
            if n.requires_grad:
                _accumulate(n, g[i])

    return _make(out, nodes, bw)


def mean_over_rows(a: Node) -> Node:
    av = a.value
    if av.ndim != 2:
        raise ValueError(f"mean_over_rows: expected a matrix, got shape {av.shape}")
    m = av.shape[0]
    out = av.mean(axis=0)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, np.broadcast_to(g / m, av.shape))

    return _make(out, (a,), bw)


def sum_all(a: Node) -> Node:
    out = np.asarray(a.value.sum())

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, np.broadcast_to(g, a.value.shape))

    return _make(out, (a,), bw)


def rows(a: Node, indices) -> Node:
    """Gather rows of a matrix (embedding lookup). Gradient scatter-adds."""
    av = a.value
    if av.ndim != 2:
        raise ValueError(f"rows: expected a matrix, got shape {av.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    out = av[idx]

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(av)
            np.add.at(a.grad, idx, g)

    return _make(out, (a,), bw)


def row(a: Node, index: int) -> Node:
    av = a.value
    if av.ndim != 2:
        raise ValueError(f"row: expected a matrix, got shape {av.shape}")
    out = av[index]

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(av)
            a.grad[index] += g

    return _make(out, (a,), bw)


def pick(a: Node, index: int) -> Node:
    """Select one entry of a vector as a scalar."""
    av = a.value
    if av.ndim != 1:
        raise ValueError(f"pick: expected a vector, got shape {av.shape}")
    out = np.asarray(av[index])

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(av)
            a.grad[index] += g

    return _make(out, (a,), bw)


def pick2(a: Node, i: int, j: int) -> Node:
    """Select one entry of a matrix as a scalar."""
    av = a.value
    if av.ndim != 2:
        raise ValueError(f"pick2: expected a matrix, got shape {av.shape}")
    out = np.asarray(av[i, j])

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(av)
            a.grad[i, j] += g

    return _make(out, (a,), bw)


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    out = a.value.reshape(shape)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g.reshape(a.value.shape))

    return _make(out, (a,), bw)


def dropout(a: Node, p: float, rng: np.random.Generator) -> Node:
    """Inverted dropout: zero entries with probability p, scale rest by 1/(1-p).

    Callers disable this at evaluation time by not applying it; p=0 is the
    identity (the rng is still consumed so seeded runs stay aligned).
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout: rate must be in [0, 1), got {p}")
    mask = (rng.random(a.value.shape) >= p) / (1.0 - p)
    out = a.value * mask

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g * mask)

    return _make(out, (a,), bw)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------


def backward(root: Node) -> None:
    """Populate grads of every parameter reachable from a scalar node.

    Gradients sum across fan-out. Nodes that do not require grad are never
    visited.
    """
    if root.value.ndim != 0:
        raise ValueError(f"backward: root must be a scalar, got shape {root.value.shape}")
    if not root.requires_grad:
        return

    # Iterative post-order DFS over the requires_grad subgraph. The graph is
    # acyclic by construction (eager creation order), so a visited-but-
    # unfinished parent cannot occur.
    topo: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        nid = id(node)
        if nid in visited:
            continue
        visited.add(nid)
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    root.grad = np.asarray(1.0)
    for node in reversed(topo):
        bw = node._backward
        if bw is not None and node.grad is not None:
            bw(node.grad)


# ---------------------------------------------------------------------------
# parameters and gradient checking
# ---------------------------------------------------------------------------


class ParamStore:
    """Named trainable tensors plus per-parameter optimizer state.

    Parameter nodes are long-lived: graphs reference them directly and
    optimizer steps update ``node.value`` in place between graphs.
    """

    def __init__(self) -> None:
        self._params: dict[str, Node] = {}
        self.opt_state: dict[str, dict[str, np.ndarray]] = {}
        self.step_count = 0

    def add(self, name: str, value) -> Node:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        node = parameter(value)
        self._params[name] = node
        return node

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for node in self._params.values():
            node.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        """Current gradients; parameters untouched by backward get zeros."""
        return {
            name: (node.grad if node.grad is not None else np.zeros_like(node.value))
            for name, node in self._params.items()
        }

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: node.value.copy() for name, node in self._params.items()}

    def load(self, values: dict[str, np.ndarray]) -> None:
        for name, node in self._params.items():
            if name not in values:
                raise KeyError(f"missing parameter {name!r} in snapshot")
            arr = np.asarray(values[name], dtype=np.float64)
            if arr.shape != node.value.shape:
                raise ValueError(
                    f"parameter {name!r}: shape {arr.shape} != expected {node.value.shape}"
                )
            node.value[...] = arr

    def n_values(self) -> int:
        return sum(node.value.size for node in self._params.values())


def grad_check(
    loss_fn: Callable[[], Node],
    store: ParamStore,
    eps: float = 1e-5,
    max_coords_per_param: int = 8,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` must rebuild the graph from the store's current values and be
    deterministic (no dropout). Returns the max over sampled coordinates of
    ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    store.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.value):
        raise ValueError(f"grad_check: non-finite loss {loss.value!r}")
    backward(loss)
    analytic = store.grads()

    worst = 0.0
    for name, node in store.items():
        flat = node.value.reshape(-1)
        size = flat.size
        count = min(max_coords_per_param, size)
        coords = rng.choice(size, size=count, replace=False) if count < size else np.arange(size)
        ana_flat = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            with no_grad():
                flat[c] = orig + eps
                lo_hi = float(loss_fn().value)
                flat[c] = orig - eps
                lo_lo = float(loss_fn().value)
            flat[c] = orig
            numeric = (lo_hi - lo_lo) / (2.0 * eps)
            err = abs(float(ana_flat[c]) - numeric) / max(1.0, abs(numeric))
            if err > worst:
                worst = err
    return worst
