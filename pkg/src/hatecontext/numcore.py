"""Dense float64 tensors with a reverse-mode gradient tape.

A Tape records every operation as it runs (define-by-run), so nodes are in
topological order by construction and one reverse sweep computes exact
gradients. Tensors are immutable values; parameters live in a ParameterSet
whose gradient buffers accumulate across backward passes until zeroed.

Broadcasting is deliberately restricted: the only mixed-shape operation is
adding a bias vector to every row of a matrix. Everything is float64.
"""

from __future__ import annotations

import builtins
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonFiniteError(FloatingPointError):
    """Raised when a computation that must stay finite produces inf or nan."""


@dataclass
class ParameterSet:
    """Named parameter tensors with matching gradient accumulators."""

    values: dict = field(default_factory=dict)
    grads: dict = field(default_factory=dict)

    def add(self, name: str, array) -> None:
        if name in self.values:
            raise ValueError(f"parameter {name!r} already exists")
        arr = np.asarray(array, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"parameter {name!r} has non-finite entries")
        self.values[name] = arr
        self.grads[name] = np.zeros_like(arr)

    def zero_grads(self) -> None:
        for grad in self.grads.values():
            grad[...] = 0.0

    def names(self) -> list:
        return list(self.values)

    def n_scalars(self) -> int:
        return builtins.sum(v.size for v in self.values.values())


class Tensor:
    """A value recorded on a tape. Do not mutate ``data``."""

    __slots__ = ("data", "tape", "index")

    def __init__(self, data: np.ndarray, tape: "Tape", index: int):
        self.data = data
        self.tape = tape
        self.index = index

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, node={self.index})"


class _Node:
    __slots__ = ("inputs", "backward", "param")

    def __init__(self, inputs: tuple, backward, param):
        self.inputs = inputs
        self.backward = backward
        self.param = param


class Tape:
    """Append-only record of operations; single-threaded by design."""

    def __init__(self) -> None:
        self._nodes: list = []

    def _record(
        self,
        data: np.ndarray,
        inputs: tuple = (),
        backward: Callable | None = None,
        param: tuple | None = None,
    ) -> Tensor:
        index = len(self._nodes)
        self._nodes.append(_Node(inputs, backward, param))
        return Tensor(data, self, index)

    def constant(self, array) -> Tensor:
        arr = np.asarray(array, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("constant has non-finite entries")
        return self._record(arr)

    def parameter(self, name: str, params: ParameterSet) -> Tensor:
        """Leaf tensor bound to a ParameterSet entry; backward accumulates
        into ``params.grads[name]``."""
        if name not in params.values:
            raise KeyError(f"unknown parameter {name!r}")
        return self._record(params.values[name], param=(params, name))


def _same_tape(*tensors: Tensor) -> Tape:
    tape = tensors[0].tape
    for t in tensors[1:]:
        if t.tape is not tape:
            raise ValueError("operands were recorded on different tapes")
    return tape


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for 1-D and 2-D operands."""
    tape = _same_tape(a, b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1-D and 2-D only: {ad.shape} @ {bd.shape}")
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {ad.shape} @ {bd.shape}")
    out = ad @ bd

    def backward(g: np.ndarray):
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 1 and bd.ndim == 2:
            return bd @ g, np.outer(ad, g)
        return g * bd, g * ad  # 1-D @ 1-D -> scalar

    return tape._record(out, (a.index, b.index), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise addition; also matrix + bias vector over rows."""
    tape = _same_tape(a, b)
    ad, bd = a.data, b.data
    if ad.shape == bd.shape:
        return tape._record(ad + bd, (a.index, b.index), lambda g: (g, g))
    if ad.ndim == 2 and bd.ndim == 1 and ad.shape[1] == bd.shape[0]:
        return tape._record(
            ad + bd, (a.index, b.index), lambda g: (g, g.sum(axis=0))
        )
    raise ShapeError(f"add shape mismatch: {ad.shape} + {bd.shape}")


def pointwise_mul(a: Tensor, b: Tensor) -> Tensor:
    tape = _same_tape(a, b)
    ad, bd = a.data, b.data
    if ad.shape != bd.shape:
        raise ShapeError(f"pointwise_mul shape mismatch: {ad.shape} * {bd.shape}")
    return tape._record(
        ad * bd, (a.index, b.index), lambda g: (g * bd, g * ad)
    )


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a plain (non-recorded) scalar."""
    return a.tape._record(a.data * factor, (a.index,), lambda g: (g * factor,))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    tape = _same_tape(*tensors)
    datas = [t.data for t in tensors]
    ndim = datas[0].ndim
    for d in datas:
        if d.ndim != ndim:
            raise ShapeError(
                f"concat rank mismatch: {[d.shape for d in datas]}"
            )
    if axis >= ndim:
        raise ShapeError(f"concat axis {axis} out of range for rank {ndim}")
    out = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray):
        pieces = []
        slicer = [slice(None)] * ndim
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            pieces.append(g[tuple(slicer)])
        return tuple(pieces)

    return tape._record(out, tuple(t.index for t in tensors), backward)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return a.tape._record(out, (a.index,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return a.tape._record(out, (a.index,), lambda g: (g * (1.0 - out * out),))


def softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis, shift-invariant (subtracts the max)."""
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    out = ex / ex.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - inner),)

    return a.tape._record(out, (a.index,), backward)


def log(a: Tensor) -> Tensor:
    out = np.log(a.data)
    return a.tape._record(out, (a.index,), lambda g: (g / a.data,))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes only where not clamped."""
    out = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)
    return a.tape._record(out, (a.index,), lambda g: (g * inside,))


def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors the tape op vocabulary
    out = np.asarray(a.data.sum())
    return a.tape._record(
        out, (a.index,), lambda g: (np.broadcast_to(g, a.data.shape).copy(),)
    )


def mean(a: Tensor) -> Tensor:
    size = a.data.size
    out = np.asarray(a.data.mean())
    return a.tape._record(
        out,
        (a.index,),
        lambda g: (np.broadcast_to(g / size, a.data.shape).copy(),),
    )


def narrow(a: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice [start, stop) along axis 0."""
    if not 0 <= start <= stop <= a.data.shape[0]:
        raise ShapeError(
            f"narrow range [{start}, {stop}) invalid for shape {a.data.shape}"
        )
    out = a.data[start:stop]

    def backward(g: np.ndarray):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)

    return a.tape._record(out, (a.index,), backward)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    out = a.data.reshape(shape)
    return a.tape._record(
        out, (a.index,), lambda g: (g.reshape(a.data.shape),)
    )


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.data.shape}")
    return a.tape._record(a.data.T, (a.index,), lambda g: (g.T,))


def backward(loss: Tensor) -> None:
    """Reverse sweep from a scalar loss; accumulates into parameter grads."""
    if loss.data.shape != ():
        raise ShapeError(f"loss must be a scalar, got shape {loss.data.shape}")
    nodes = loss.tape._nodes
    grads: list = [None] * (loss.index + 1)
    grads[loss.index] = np.ones(())
    for i in range(loss.index, -1, -1):
        g = grads[i]
        if g is None:
            continue
        node = nodes[i]
        if node.param is not None:
            params, name = node.param
            params.grads[name] += g
        if node.backward is not None:
            for j, gj in zip(node.inputs, node.backward(g)):
                if gj is None:
                    continue
                grads[j] = gj if grads[j] is None else grads[j] + gj
        grads[i] = None  # free as we go


def grad_check(
    f: Callable[[ParameterSet], Tensor], params: ParameterSet, eps: float = 1e-5
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``f`` must deterministically map the parameter set to a scalar loss
    tensor on a fresh tape (dropout and other stochastic behavior disabled).
    The relative error denominator is floored at 1e-8.
    """
    if not 0.0 < eps <= 1e-2:
        raise ValueError(f"eps must be in (0, 1e-2], got {eps}")
    params.zero_grads()
    loss = f(params)
    if not np.isfinite(loss.data):
        raise NonFiniteError("loss is not finite")
    backward(loss)
    analytic = {name: params.grads[name].copy() for name in params.values}

    worst = 0.0
    for name, value in params.values.items():
        flat = value.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            up = float(f(params).data)
            flat[i] = original - eps
            down = float(f(params).data)
            flat[i] = original
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NonFiniteError(
                    f"loss not finite while perturbing {name!r}[{i}]"
                )
            numeric = (up - down) / (2.0 * eps)
            ana = analytic[name].reshape(-1)[i]
            denom = builtins.max(abs(numeric), abs(ana), 1e-8)
            worst = builtins.max(worst, abs(numeric - ana) / denom)
    return worst
