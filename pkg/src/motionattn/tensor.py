"""Dense double-precision tensors with reverse-mode automatic differentiation.

The graph is recorded eagerly: every op returns a new ``Tensor`` holding the
result plus a closure that pushes adjoints to its parents, and ``backward``
replays the closures once in reverse topological order. Double precision is
the only compute type so that central-difference gradient checks at 1e-5 are
meaningful; ``grad_check`` implements that oracle here, next to the ops it
verifies.

Tensors are treated as immutable values once created. The two sanctioned
exceptions are the gradient buffers written by ``backward`` and the in-place
parameter update an optimizer performs between graph builds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError

Array = np.ndarray

# grad_check walks every coordinate up to this size, then falls back to a
# seeded random sample so runtime stays bounded on wide layers.
EXHAUSTIVE_COORD_LIMIT = 10_000
SAMPLED_COORDS = 256
SAMPLE_SEED = 0


class Tensor:
    """A float64 array plus the graph edge that produced it."""

    __slots__ = ("data", "grad", "name", "_parents", "_backward")

    def __init__(self, data, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor values must be finite")
        self.data = arr
        self.grad: Array | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.dims}")
        return float(self.data.reshape(()))

    def grad_or_zero(self) -> Array:
        return self.grad if self.grad is not None else np.zeros_like(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.dims}{tag})"

    # light operator sugar; the named functions below are the primary API
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other) -> "Tensor":
        return scale(self, float(other))

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def _node(data: Array, parents: tuple[Tensor, ...]) -> Tensor:
    """Internal constructor for op results (skips the leaf copy/finite check)."""
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._parents = parents
    out._backward = None
    return out


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ShapeError(msg)


# ---------------------------------------------------------------------------
# elementwise ops


def add(a: Tensor, b: Tensor) -> Tensor:
    _require(a.dims == b.dims, f"add: shapes {a.dims} vs {b.dims}")
    out = _node(a.data + b.data, (a, b))

    def _bwd():
        a.grad += out.grad
        b.grad += out.grad

    out._backward = _bwd
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require(a.dims == b.dims, f"sub: shapes {a.dims} vs {b.dims}")
    out = _node(a.data - b.data, (a, b))

    def _bwd():
        a.grad += out.grad
        b.grad -= out.grad

    out._backward = _bwd
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require(a.dims == b.dims, f"mul: shapes {a.dims} vs {b.dims}")
    out = _node(a.data * b.data, (a, b))

    def _bwd():
        a.grad += b.data * out.grad
        b.grad += a.data * out.grad

    out._backward = _bwd
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = _node(a.data * c, (a,))

    def _bwd():
        a.grad += c * out.grad

    out._backward = _bwd
    return out


def shift(a: Tensor, c: float) -> Tensor:
    out = _node(a.data + c, (a,))

    def _bwd():
        a.grad += out.grad

    out._backward = _bwd
    return out


def scale_by(a: Tensor, s: Tensor) -> Tensor:
    """Multiply by a single-element tensor (broadcast over all entries)."""
    _require(s.size == 1, f"scale_by: scalar expected, got shape {s.dims}")
    out = _node(a.data * s.data.reshape(()), (a, s))

    def _bwd():
        a.grad += s.data.reshape(()) * out.grad
        s.grad += np.sum(a.data * out.grad).reshape(s.dims)

    out._backward = _bwd
    return out


def shift_by(a: Tensor, s: Tensor) -> Tensor:
    """Add a single-element tensor (broadcast over all entries)."""
    _require(s.size == 1, f"shift_by: scalar expected, got shape {s.dims}")
    out = _node(a.data + s.data.reshape(()), (a, s))

    def _bwd():
        a.grad += out.grad
        s.grad += np.sum(out.grad).reshape(s.dims)

    out._backward = _bwd
    return out


def relu(a: Tensor) -> Tensor:
    out = _node(np.maximum(a.data, 0.0), (a,))

    def _bwd():
        a.grad += (a.data > 0.0) * out.grad

    out._backward = _bwd
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = _node(y, (a,))

    def _bwd():
        a.grad += (1.0 - y * y) * out.grad

    out._backward = _bwd
    return out


# ---------------------------------------------------------------------------
# matrix ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require(a.data.ndim == 2 and b.data.ndim == 2, "matmul: operands must be matrices")
    _require(
        a.dims[1] == b.dims[0],
        f"matmul: inner dims {a.dims} x {b.dims} do not match",
    )
    out = _node(a.data @ b.data, (a, b))

    def _bwd():
        a.grad += out.grad @ b.data.T
        b.grad += a.data.T @ out.grad

    out._backward = _bwd
    return out


def transpose(a: Tensor) -> Tensor:
    _require(a.data.ndim == 2, "transpose: matrix expected")
    out = _node(np.ascontiguousarray(a.data.T), (a,))

    def _bwd():
        a.grad += out.grad.T

    out._backward = _bwd
    return out


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map X W (+ b broadcast per row)."""
    _require(x.data.ndim == 2 and w.data.ndim == 2, "linear: matrices expected")
    _require(
        x.dims[1] == w.dims[0],
        f"linear: input width {x.dims} incompatible with weight {w.dims}",
    )
    y = x.data @ w.data
    if b is None:
        parents: tuple[Tensor, ...] = (x, w)
    else:
        _require(
            b.data.ndim == 1 and b.dims[0] == w.dims[1],
            f"linear: bias shape {b.dims} does not match weight {w.dims}",
        )
        y = y + b.data
        parents = (x, w, b)
    out = _node(y, parents)

    def _bwd():
        x.grad += out.grad @ w.data.T
        w.grad += x.data.T @ out.grad
        if b is not None:
            b.grad += out.grad.sum(axis=0)

    out._backward = _bwd
    return out


def softmax_rows(m: Tensor) -> Tensor:
    """Row-wise softmax with per-row max subtraction for stability."""
    _require(m.data.ndim == 2, "softmax_rows: matrix expected")
    shifted = m.data - m.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = _node(y, (m,))

    def _bwd():
        g = out.grad
        m.grad += y * (g - np.sum(g * y, axis=1, keepdims=True))

    out._backward = _bwd
    return out


def row_block_matmul(a: Tensor, f: Tensor) -> Tensor:
    """Per-row mixing of consecutive row blocks: out[g] = a[g] @ f[g*k:(g+1)*k].

    ``a`` is (G, k) and ``f`` is (G*k, C); each row of ``a`` weights its own
    block of k rows of ``f``.
    """
    _require(a.data.ndim == 2 and f.data.ndim == 2, "row_block_matmul: matrices expected")
    g_count, k = a.dims
    _require(
        f.dims[0] == g_count * k,
        f"row_block_matmul: {f.dims[0]} rows cannot split into {g_count} blocks of {k}",
    )
    c = f.dims[1]
    blocks = f.data.reshape(g_count, k, c)
    out = _node(np.einsum("gk,gkc->gc", a.data, blocks), (a, f))

    def _bwd():
        g = out.grad
        a.grad += np.einsum("gc,gkc->gk", g, blocks)
        f.grad += (a.data[:, :, None] * g[:, None, :]).reshape(g_count * k, c)

    out._backward = _bwd
    return out


# ---------------------------------------------------------------------------
# shape / selection ops


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    _require(
        int(np.prod(shape, dtype=np.int64)) == a.size,
        f"reshape: cannot view {a.dims} as {shape}",
    )
    out = _node(a.data.reshape(shape), (a,))

    def _bwd():
        a.grad += out.grad.reshape(a.dims)

    out._backward = _bwd
    return out


def take_rows(a: Tensor, indices) -> Tensor:
    """Gather rows by index; repeated indices accumulate gradient."""
    _require(a.data.ndim == 2, "take_rows: matrix expected")
    idx = np.asarray(indices, dtype=np.int64)
    _require(idx.ndim == 1, "take_rows: flat index list expected")
    if idx.size and (idx.min() < 0 or idx.max() >= a.dims[0]):
        raise ShapeError(f"take_rows: index out of range for {a.dims[0]} rows")
    out = _node(a.data[idx], (a,))

    def _bwd():
        np.add.at(a.grad, idx, out.grad)

    out._backward = _bwd
    return out


def take_cols(a: Tensor, lo: int, hi: int) -> Tensor:
    _require(a.data.ndim == 2, "take_cols: matrix expected")
    _require(0 <= lo < hi <= a.dims[1], f"take_cols: bad range [{lo}, {hi}) for {a.dims}")
    out = _node(np.ascontiguousarray(a.data[:, lo:hi]), (a,))

    def _bwd():
        a.grad[:, lo:hi] += out.grad

    out._backward = _bwd
    return out


def concat_rows(tensors: Sequence[Tensor]) -> Tensor:
    _require(len(tensors) > 0, "concat_rows: empty input")
    width = tensors[0].dims[1] if tensors[0].data.ndim == 2 else None
    for t in tensors:
        _require(t.data.ndim == 2 and t.dims[1] == width, "concat_rows: widths differ")
    out = _node(np.concatenate([t.data for t in tensors], axis=0), tuple(tensors))

    def _bwd():
        r = 0
        for t in tensors:
            n = t.dims[0]
            t.grad += out.grad[r : r + n]
            r += n

    out._backward = _bwd
    return out


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    _require(len(tensors) > 0, "concat_cols: empty input")
    height = tensors[0].dims[0] if tensors[0].data.ndim == 2 else None
    for t in tensors:
        _require(t.data.ndim == 2 and t.dims[0] == height, "concat_cols: heights differ")
    out = _node(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors))

    def _bwd():
        c = 0
        for t in tensors:
            n = t.dims[1]
            t.grad += out.grad[:, c : c + n]
            c += n

    out._backward = _bwd
    return out


def tile_rows(v: Tensor, n: int) -> Tensor:
    """Broadcast a vector (or single row) to n identical rows."""
    _require(n >= 1, "tile_rows: n must be positive")
    row = v.data.reshape(1, -1)
    out = _node(np.repeat(row, n, axis=0), (v,))

    def _bwd():
        v.grad += out.grad.sum(axis=0).reshape(v.dims)

    out._backward = _bwd
    return out


def index_entry(v: Tensor, i: int) -> Tensor:
    """Select one entry of a vector as a scalar tensor."""
    _require(v.data.ndim == 1, "index_entry: vector expected")
    _require(0 <= i < v.dims[0], f"index_entry: index {i} out of range for {v.dims}")
    out = _node(np.array(v.data[i]), (v,))

    def _bwd():
        v.grad[i] += out.grad.reshape(())

    out._backward = _bwd
    return out


def detach(a: Tensor) -> Tensor:
    """A constant copy: same values, no gradient path to ``a``."""
    return Tensor(a.data)


# ---------------------------------------------------------------------------
# reductions


def sum_all(a: Tensor) -> Tensor:
    out = _node(np.array(a.data.sum()), (a,))

    def _bwd():
        a.grad += out.grad.reshape(())

    out._backward = _bwd
    return out


def mean_all(a: Tensor) -> Tensor:
    n = a.size
    out = _node(np.array(a.data.mean()), (a,))

    def _bwd():
        a.grad += out.grad.reshape(()) / n

    out._backward = _bwd
    return out


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean of squared elementwise differences (mean over all elements)."""
    d = sub(a, b)
    return mean_all(mul(d, d))


# ---------------------------------------------------------------------------
# reverse pass


def backward(seed: Tensor, leaves: Sequence[Tensor] = ()) -> None:
    """Populate ``grad`` on every node reachable from ``seed``.

    ``seed`` must be scalar. Adjoints are recomputed from scratch on every
    call. Tensors in ``leaves`` that do not appear on any path to the seed
    get a zero adjoint so callers can read ``grad`` unconditionally.
    """
    if seed.size != 1:
        raise ShapeError(f"backward: seed must be scalar, got shape {seed.dims}")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(seed, False)]
    while stack:
        node, emitted = stack.pop()
        if emitted:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    for node in topo:
        node.grad = np.zeros_like(node.data)
    seed.grad = np.ones_like(seed.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()

    for leaf in leaves:
        if id(leaf) not in visited:
            leaf.grad = np.zeros_like(leaf.data)


# ---------------------------------------------------------------------------
# finite-difference oracle


@dataclass
class GradReport:
    """Outcome of a central-difference check of ``backward``.

    ``max_rel_err`` maps parameter name to the worst relative error seen,
    where relative error is |analytic - numeric| / max(1, |analytic|,
    |numeric|).
    """

    max_rel_err: dict[str, float]
    passed: bool
    h: float
    tol: float

    def worst(self) -> float:
        return max(self.max_rel_err.values(), default=0.0)


def grad_check(
    builder: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-5,
    sample_seed: int = SAMPLE_SEED,
) -> GradReport:
    """Compare reverse-mode adjoints against (f(p+h) - f(p-h)) / 2h.

    ``builder`` must deterministically rebuild the scalar objective from the
    current parameter values. Parameters with at most
    ``EXHAUSTIVE_COORD_LIMIT`` coordinates are checked exhaustively; larger
    ones on a seeded random sample of ``SAMPLED_COORDS`` coordinates.
    """
    if h <= 0:
        raise ValueError("grad_check: h must be positive")

    out = builder()
    if out.size != 1:
        raise ShapeError("grad_check: builder must return a scalar")
    backward(out, leaves=params)
    analytic = [p.grad_or_zero().reshape(-1).copy() for p in params]

    errs: dict[str, float] = {}
    worst_all = 0.0
    for slot, (p, ana) in enumerate(zip(params, analytic)):
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= EXHAUSTIVE_COORD_LIMIT:
            coords = np.arange(n)
        else:
            rng = np.random.default_rng(sample_seed + slot)
            coords = np.sort(rng.choice(n, size=SAMPLED_COORDS, replace=False))
        worst = 0.0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = builder().item()
            flat[i] = orig - h
            f_minus = builder().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = ana[i]
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if rel > worst:
                worst = rel
        name = p.name or f"param{slot}"
        errs[name] = worst
        worst_all = max(worst_all, worst)

    return GradReport(max_rel_err=errs, passed=worst_all <= tol, h=h, tol=tol)
