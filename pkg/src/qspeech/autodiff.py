"""Dense real tensors with reverse-mode automatic differentiation.

Define-by-run: each differentiable operation returns a new :class:`Tensor`
that records its parents and a backward closure. ``backward(loss)`` walks
the recorded graph once in reverse topological order, so every recorded
input receives its gradient contribution exactly once per downstream use.
Distinct graphs are independent; nothing here is shared mutable state.

All data is stored as contiguous float64 numpy arrays. numpy supplies the
array arithmetic; the differentiation rules live here.

``conv2d`` computes cross-correlation (no kernel flip) with zero padding,
the usual deep-learning convention.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["Tensor", "backward", "matmul", "conv2d", "maxpool1d", "softmax", "concat"]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over axes that were broadcast up from ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A float64 array node in a dynamically recorded computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr) if arr.ndim else arr.copy()
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents: tuple["Tensor", ...] = ()
        self._backward = None

    # -- graph plumbing ---------------------------------------------------

    @staticmethod
    def _result(data, parents: tuple["Tensor", ...]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
        return out

    def _accum(self, g: np.ndarray) -> None:
        if self.requires_grad:
            if self.grad is None:
                self.grad = np.zeros_like(self.data)
            self.grad += g

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"

    # -- elementwise ------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data + other.data, (self, other))
        if out.requires_grad:
            def bw():
                self._accum(_unbroadcast(out.grad, self.data.shape))
                other._accum(_unbroadcast(out.grad, other.data.shape))
            out._backward = bw
        return out

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        out = Tensor._result(-self.data, (self,))
        if out.requires_grad:
            out._backward = lambda: self._accum(-out.grad)
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data * other.data, (self, other))
        if out.requires_grad:
            def bw():
                self._accum(_unbroadcast(out.grad * other.data, self.data.shape))
                other._accum(_unbroadcast(out.grad * self.data, other.data.shape))
            out._backward = bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Tensor":
        if not isinstance(scalar, (int, float)):
            raise TypeError("Tensor division only supports python scalars")
        return self * (1.0 / scalar)

    def relu(self) -> "Tensor":
        out = Tensor._result(np.maximum(self.data, 0.0), (self,))
        if out.requires_grad:
            mask = self.data > 0.0
            out._backward = lambda: self._accum(out.grad * mask)
        return out

    def log(self) -> "Tensor":
        out = Tensor._result(np.log(self.data), (self,))
        if out.requires_grad:
            out._backward = lambda: self._accum(out.grad / self.data)
        return out

    def exp(self) -> "Tensor":
        out = Tensor._result(np.exp(self.data), (self,))
        if out.requires_grad:
            out._backward = lambda: self._accum(out.grad * out.data)
        return out

    # -- reductions -------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = Tensor._result(self.data.sum(axis=axis, keepdims=keepdims), (self,))
        if out.requires_grad:
            def bw():
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                self._accum(np.broadcast_to(g, self.data.shape).copy())
            out._backward = bw
        return out

    def max(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        """Max reduction; gradient flows to the first maximal element."""
        out = Tensor._result(self.data.max(axis=axis, keepdims=keepdims), (self,))
        if out.requires_grad:
            if axis is None:
                flat_idx = int(self.data.argmax())
                def bw():
                    g = np.zeros_like(self.data)
                    g.reshape(-1)[flat_idx] = out.grad.reshape(())
                    self._accum(g)
            else:
                idx = np.expand_dims(self.data.argmax(axis=axis), axis)
                def bw():
                    g = out.grad
                    if not keepdims:
                        g = np.expand_dims(g, axis)
                    buf = np.zeros_like(self.data)
                    np.put_along_axis(buf, idx, g, axis=axis)
                    self._accum(buf)
            out._backward = bw
        return out

    # -- shape manipulation -------------------------------------------------

    def reshape(self, shape: Sequence[int]) -> "Tensor":
        out = Tensor._result(self.data.reshape(shape), (self,))
        if out.requires_grad:
            out._backward = lambda: self._accum(out.grad.reshape(self.data.shape))
        return out

    def transpose(self, axes: Sequence[int]) -> "Tensor":
        inv = np.argsort(axes)
        out = Tensor._result(self.data.transpose(axes), (self,))
        if out.requires_grad:
            out._backward = lambda: self._accum(out.grad.transpose(inv))
        return out

    def __getitem__(self, idx) -> "Tensor":
        out = Tensor._result(self.data[idx], (self,))
        if out.requires_grad:
            def bw():
                g = np.zeros_like(self.data)
                g[idx] += out.grad
                self._accum(g)
            out._backward = bw
        return out

    def matmul(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float64))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product with the standard backward rules."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul inner dimensions disagree: {a.data.shape} @ {b.data.shape}")
    out = Tensor._result(a.data @ b.data, (a, b))
    if out.requires_grad:
        def bw():
            a._accum(out.grad @ b.data.T)
            b._accum(a.data.T @ out.grad)
        out._backward = bw
    return out


def conv2d(x: Tensor, w: Tensor, stride: tuple[int, int] = (1, 1),
           padding: tuple[int, int] = (0, 0)) -> Tensor:
    """Batched 2-D cross-correlation.

    ``x`` has shape (batch, c_in, H, W), ``w`` has shape
    (c_out, c_in, kh, kw). Output spatial size per axis is
    ``(extent + 2*pad - k) // stride + 1``. Implemented as im2col plus one
    matrix product.
    """
    sh, sw = stride
    ph, pw = padding
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError("conv2d expects 4-D input and kernel")
    bsz, cin, h, wd = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input has {cin}, kernel expects {cin_w}")
    if h + 2 * ph < kh or wd + 2 * pw < kw:
        raise ValueError("conv2d: padded input smaller than kernel")
    if sh < 1 or sw < 1:
        raise ValueError("conv2d: stride must be >= 1")

    oh = (h + 2 * ph - kh) // sh + 1
    ow = (wd + 2 * pw - kw) // sw + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(bsz * oh * ow, cin * kh * kw)
    wmat = w.data.reshape(cout, cin * kh * kw)
    out_data = (cols @ wmat.T).reshape(bsz, oh, ow, cout).transpose(0, 3, 1, 2)

    out = Tensor._result(out_data, (x, w))
    if out.requires_grad:
        def bw():
            g = out.grad.transpose(0, 2, 3, 1).reshape(bsz * oh * ow, cout)
            if w.requires_grad:
                w._accum((g.T @ cols).reshape(cout, cin, kh, kw))
            if x.requires_grad:
                gwin = (g @ wmat).reshape(bsz, oh, ow, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
                gxp = np.zeros_like(xp)
                for u in range(kh):
                    for v in range(kw):
                        gxp[:, :, u:u + sh * (oh - 1) + 1:sh,
                            v:v + sw * (ow - 1) + 1:sw] += gwin[:, :, :, :, u, v]
                x._accum(gxp[:, :, ph:ph + h, pw:pw + wd])
        out._backward = bw
    return out


def maxpool1d(x: Tensor, width: int, axis: int = 2) -> Tensor:
    """Max over non-overlapping windows of ``width`` along one axis.

    A ragged tail shorter than ``width`` is truncated. Gradient goes to
    the first maximal element of each window, so ties break
    deterministically.
    """
    if width < 1:
        raise ValueError("pool width must be >= 1")
    n = x.data.shape[axis]
    np_out = n // width
    if np_out < 1:
        raise ValueError(f"pool width {width} exceeds axis extent {n}")

    moved = np.moveaxis(x.data, axis, -1)
    lead = moved.shape[:-1]
    xr = moved[..., :np_out * width].reshape(lead + (np_out, width))
    out_m = xr.max(axis=-1)
    out = Tensor._result(np.moveaxis(out_m, -1, axis), (x,))
    if out.requires_grad:
        idx = np.expand_dims(xr.argmax(axis=-1), -1)
        def bw():
            g = np.moveaxis(out.grad, axis, -1)
            buf = np.zeros(lead + (np_out, width))
            np.put_along_axis(buf, idx, np.expand_dims(g, -1), axis=-1)
            gm = np.zeros(moved.shape)
            gm[..., :np_out * width] = buf.reshape(lead + (np_out * width,))
            x._accum(np.moveaxis(gm, -1, axis))
        out._backward = bw
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)
    out = Tensor._result(s, (x,))
    if out.requires_grad:
        def bw():
            gs = out.grad * s
            x._accum(gs - s * gs.sum(axis=axis, keepdims=True))
        out._backward = bw
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along an axis; backward splits the gradient."""
    ts = list(tensors)
    out = Tensor._result(np.concatenate([t.data for t in ts], axis=axis), tuple(ts))
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in ts]
        offsets = np.cumsum([0] + sizes)
        def bw():
            g = np.moveaxis(out.grad, axis, 0)
            for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
                t._accum(np.moveaxis(g[lo:hi], 0, axis))
        out._backward = bw
    return out


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar ``loss`` into ``.grad`` fields.

    Gradients add up across calls; clear them through ``zero_grads`` (or
    by setting ``.grad = None``) between steps.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    # Iterative DFS: deep conv stacks would blow the recursion limit.
    topo: list[Tensor] = []
    state: dict[int, int] = {}
    stack = [loss]
    while stack:
        node = stack[-1]
        st = state.get(id(node), 0)
        if st == 0:
            state[id(node)] = 1
            for p in node._parents:
                if state.get(id(p), 0) == 0:
                    stack.append(p)
        else:
            stack.pop()
            if st == 1:
                state[id(node)] = 2
                topo.append(node)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None
