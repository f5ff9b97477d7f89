"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation returns a :class:`Tensor` that remembers its parents and a
closure mapping the output gradient to one gradient per parent.  Operations
whose parents do not require gradients produce plain constants, so inference
builds no graph at all.

The primitives the segmenter needs (attention, layer norm, rotary embeddings,
pooling, the weighted loss) are fused: each has a hand-written backward pass
instead of being composed from elementwise pieces.  This keeps the number of
Python-level nodes per training step small.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    AllMasked,
    DoubleBackward,
    NonScalarLoss,
    OddDimension,
    ShapeMismatch,
)

PROB_CLAMP = 1e-7

_SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))
_GELU_C = 0.044715


class Tensor:
    """A dense array plus the bookkeeping needed for reverse-mode AD.

    Attributes:
        data: the value, a floating point ``np.ndarray``.
        grad: gradient of the last ``backward`` call w.r.t. this leaf, or
            ``None`` before any backward pass.
        requires_grad: whether gradients flow into this tensor.
        op: tag of the operation that produced the tensor (``"leaf"`` for
            inputs and parameters).
    """

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "op", "_consumed")

    def __init__(self, data, requires_grad: bool = False, *, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.parents: tuple[Tensor, ...] = ()
        self.backward_fn = None
        self.op = "leaf"
        self._consumed = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other, self.dtype)))

    def __rsub__(self, other):
        return add(_as_tensor(other, self.dtype), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


def _as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype or np.float64))


def _node(data: np.ndarray, parents: Sequence[Tensor], backward_fn: Callable, op: str) -> Tensor:
    out = Tensor(data)
    out.op = op
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = tuple(parents)
        out.backward_fn = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in reversed(node.parents):
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every requires-grad leaf reachable from ``loss``.

    Leaf gradients are reset to zero before accumulation, so each call
    reports the gradient of this loss alone.  A graph can be differentiated
    once; build a fresh forward pass for another backward.

    Raises:
        NonScalarLoss: ``loss`` has more than one element.
        DoubleBackward: ``backward`` was already called on this loss.
    """
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss must be a scalar, got shape {loss.shape}")
    if loss._consumed:
        raise DoubleBackward("backward already ran on this graph")
    loss._consumed = True
    if not loss.requires_grad:
        return
    order = _topological_order(loss)
    for node in order:
        if node.backward_fn is None:
            node.grad = np.zeros_like(node.data)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.backward_fn is None:
            node.grad = node.grad + g
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, a.dtype)
    sa, sb = a.shape, b.shape
    return _node(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda g: (-g,), "neg")


def mul(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, a.dtype)
    ad, bd = a.data, b.data

    def bw(g):
        return (
            _unbroadcast(g * bd, ad.shape) if a.requires_grad else None,
            _unbroadcast(g * ad, bd.shape) if b.requires_grad else None,
        )

    return _node(ad * bd, (a, b), bw, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, broadcasting leading axes.

    Raises:
        ShapeMismatch: inner dimensions differ or an operand is not at
            least two-dimensional.
    """
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatch(f"matmul needs >= 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def bw(g):
        ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape) if a.requires_grad else None
        gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape) if b.requires_grad else None
        return ga, gb

    return _node(ad @ bd, (a, b), bw, "matmul")


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = a.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _node(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), bw, "sum")


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / float(count))


def reshape(a: Tensor, shape) -> Tensor:
    src = a.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(src),), "reshape")


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "transpose")


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _node(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation (smooth everywhere, unlike ReLU)."""
    x = a.data
    x2 = x * x
    inner = _SQRT_2_OVER_PI * (x + _GELU_C * x2 * x)
    t = np.tanh(inner)
    y = 0.5 * x * (1.0 + t)

    def bw(g):
        d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_C * x2)
        return (g * d,)

    return _node(y, (a,), bw, "gelu")


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` with max-subtraction."""
    x = a.data
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    y = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _node(y, (a,), bw, "softmax")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean and unit variance, then apply
    ``gain`` and ``bias``."""
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gain.data
    lead = tuple(range(xd.ndim - 1))

    def bw(g):
        dgain = (g * xhat).sum(axis=lead) if gain.requires_grad else None
        dbias = g.sum(axis=lead) if bias.requires_grad else None
        dx = None
        if x.requires_grad:
            dxhat = g * gd
            dx = inv * (
                dxhat
                - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            )
        return dx, dgain, dbias

    return _node(xhat * gd + bias.data, (x, gain, bias), bw, "layer_norm")


def rope_tables(n: int, d: int, base: float = 10000.0, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """Cosine and sine tables of shape ``(n, d // 2)`` for positions 0..n-1."""
    if d % 2:
        raise OddDimension(f"rotary embeddings need an even dimension, got {d}")
    theta = base ** (-np.arange(0, d, 2, dtype=np.float64) / d)
    angles = np.arange(n, dtype=np.float64)[:, None] * theta[None, :]
    return np.cos(angles).astype(dtype), np.sin(angles).astype(dtype)


def rope_rotate(x: Tensor, base: float = 10000.0) -> Tensor:
    """Rotate each (2i, 2i+1) pair of row ``m`` by ``m * base**(-2i/d)``.

    ``x`` has shape ``(..., positions, d)``; positions are counted from 0
    along the second-to-last axis.

    Raises:
        OddDimension: ``d`` is odd.
    """
    *lead, n, d = x.shape
    cos, sin = rope_tables(n, d, base, x.dtype)
    xd = x.data.reshape(*lead, n, d // 2, 2)
    x0, x1 = xd[..., 0], xd[..., 1]
    out = np.stack((x0 * cos - x1 * sin, x0 * sin + x1 * cos), axis=-1).reshape(x.shape)

    def bw(g):
        g = g.reshape(*lead, n, d // 2, 2)
        g0, g1 = g[..., 0], g[..., 1]
        return (np.stack((g0 * cos + g1 * sin, g1 * cos - g0 * sin), axis=-1).reshape(x.shape),)

    return _node(out, (x,), bw, "rope")


def masked_attention(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray) -> Tensor:
    """Scaled dot-product attention restricted to ``mask``.

    ``q``, ``k`` and ``v`` have shape ``(..., n, d_h)``; ``mask`` is boolean,
    broadcastable to ``(..., n_q, n_k)``, with ``True`` where a query may
    attend a key.  Disallowed keys receive exactly zero weight, so their
    values never influence the output.

    Raises:
        ShapeMismatch: operand shapes disagree, or some query row has no
            visible key.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeMismatch(f"attention shapes disagree: q{q.shape} k{k.shape} v{v.shape}")
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, q.shape[:-1] + (k.shape[-2],))
    except ValueError as exc:
        raise ShapeMismatch(f"mask {mask.shape} does not fit q{q.shape} k{k.shape}") from exc
    if not mask.any(axis=-1).all():
        raise ShapeMismatch("every query row needs at least one visible key")
    qd, kd, vd = q.data, k.data, v.data
    scale = 1.0 / np.sqrt(qd.shape[-1])
    scores = np.where(mask, (qd @ np.swapaxes(kd, -1, -2)) * scale, -np.inf)
    e = np.exp(scores - scores.max(axis=-1, keepdims=True))
    p = e / e.sum(axis=-1, keepdims=True)
    out = p @ vd

    def bw(g):
        dv = _unbroadcast(np.swapaxes(p, -1, -2) @ g, vd.shape) if v.requires_grad else None
        dp = g @ np.swapaxes(vd, -1, -2)
        ds = p * (dp - (dp * p).sum(axis=-1, keepdims=True)) * scale
        dq = _unbroadcast(ds @ kd, qd.shape) if q.requires_grad else None
        dk = _unbroadcast(np.swapaxes(ds, -1, -2) @ qd, kd.shape) if k.requires_grad else None
        return dq, dk, dv

    return _node(out, (q, k, v), bw, "attention")


def mean_pool(x: Tensor, valid: np.ndarray) -> Tensor:
    """Average ``x`` of shape ``(..., tokens, d)`` over rows where ``valid``.

    Raises:
        AllMasked: some group has no valid row.
    """
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != x.shape[:-1]:
        raise ShapeMismatch(f"valid mask {valid.shape} does not match rows {x.shape[:-1]}")
    count = valid.sum(axis=-1)
    if (count == 0).any():
        raise AllMasked("mean pooling over zero valid rows")
    w = (valid / count[..., None]).astype(x.dtype)[..., None]
    out = (np.where(valid[..., None], x.data, 0.0) * w).sum(axis=-2)

    def bw(g):
        return (g[..., None, :] * w,)

    return _node(out, (x,), bw, "mean_pool")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``table`` (``vocab x d``) at integer ``ids``."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab, d = table.shape

    def bw(g):
        gt = np.zeros((vocab, d), dtype=g.dtype)
        np.add.at(gt, ids.ravel(), g.reshape(-1, d))
        return (gt,)

    return _node(table.data[ids], (table,), bw, "embedding")


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when ``rate == 0`` or ``rng`` is None."""
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return _node(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def gate_gradient(x: Tensor, keep: np.ndarray) -> Tensor:
    """Identity forward; backward zeroes the gradient wherever ``keep`` is
    False (``keep`` broadcasts against ``x``).

    Values pass through bit-for-bit, and where ``keep`` is True the gradient
    is passed through untouched.
    """
    keep = np.asarray(keep, dtype=bool)
    return _node(x.data, (x,), lambda g: (np.where(keep, g, 0.0).astype(g.dtype),), "gate")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    y = matmul(x, weight)
    return y if bias is None else add(y, bias)


def weighted_bce(
    p: Tensor,
    y: np.ndarray,
    weights: Sequence[float] = (1.0, 2.0),
    valid: np.ndarray | None = None,
) -> Tensor:
    """Class-weighted binary cross-entropy, normalized by the total weight.

    Each position contributes ``weights[1]`` if its label is 1 and
    ``weights[0]`` otherwise; positions where ``valid`` is False contribute
    nothing.  Probabilities are clamped to ``[1e-7, 1 - 1e-7]`` before the
    logarithm (the gradient is zero outside the clamp).

    Raises:
        ShapeMismatch: ``p`` and ``y`` differ in shape.
    """
    y = np.asarray(y)
    if y.shape != p.shape:
        raise ShapeMismatch(f"probabilities {p.shape} vs labels {y.shape}")
    yb = y.astype(bool)
    w = np.where(yb, weights[1], weights[0]).astype(p.dtype)
    if valid is not None:
        w = w * np.asarray(valid, dtype=bool)
    total = w.sum()
    pd = p.data
    pc = np.clip(pd, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if total == 0:
        return _node(np.zeros((), dtype=pd.dtype), (p,), lambda g: (np.zeros_like(pd),), "wbce")
    ll = np.where(yb, np.log(pc), np.log1p(-pc))
    loss = -(w * ll).sum() / total
    inside = (pd >= PROB_CLAMP) & (pd <= 1.0 - PROB_CLAMP)

    def bw(g):
        dpc = np.where(yb, 1.0 / pc, -1.0 / (1.0 - pc))
        return (g * (-(w / total) * dpc * inside),)

    return _node(np.asarray(loss, dtype=pd.dtype), (p,), bw, "wbce")


# ---------------------------------------------------------------------------
# finite-difference check
# ---------------------------------------------------------------------------


def grad_check(
    f: Callable[[list[Tensor]], Tensor],
    inputs: Iterable,
    seed: int = 0,
    *,
    n_coords: int | None = None,
    h: float = 1e-4,
    floor: float = 1e-6,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    The numeric derivative uses the five-point (fourth-order) central
    stencil, whose truncation error is negligible at ``h = 1e-4``.

    Args:
        f: builds a scalar loss from a list of tensors (one per input).
        inputs: arrays, or shape tuples to be filled with standard normal
            draws from ``seed``.
        seed: seeds both the random inputs and coordinate sampling.
        n_coords: number of coordinates probed per input; all when None.
        h: relative step, scaled by ``max(1, |x_i|)``.
        floor: lower bound on the denominator
            ``max(|analytic|, |numeric|, floor)`` so that coordinates with
            vanishing gradients are compared in absolute terms.
    """
    rng = np.random.default_rng(seed)
    arrays = [
        rng.standard_normal(a) if isinstance(a, tuple) else np.array(a, dtype=np.float64)
        for a in inputs
    ]
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    backward(f(leaves))
    worst = 0.0
    for i, base in enumerate(arrays):
        flat = base.ravel()
        if n_coords is None or n_coords >= flat.size:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, size=n_coords, replace=False)
        analytic = leaves[i].grad.ravel()
        for j in coords:
            step = h * max(1.0, abs(flat[j]))
            values = {}
            for offset in (-2, -1, 1, 2):
                probe = [a.copy() for a in arrays]
                probe[i].ravel()[j] += offset * step
                values[offset] = float(f([Tensor(a) for a in probe]).data)
            # fourth-order central stencil
            numeric = (8.0 * (values[1] - values[-1]) - (values[2] - values[-2])) / (12.0 * step)
            err = abs(analytic[j] - numeric) / max(abs(analytic[j]), abs(numeric), floor)
            worst = max(worst, err)
    return worst
