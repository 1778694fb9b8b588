"""Quaternion-valued neural network layers.

A quaternion tensor is stored as four real component planes (r, x, y, z)
of identical shape, so one quaternion channel corresponds to four real
channels. Convolution and dense layers apply the Hamilton product between
a quaternion weight ``W = R + Xi + Yj + Zk`` and the input
``Q = r + xi + yj + zk``::

    W (*) Q = (Rr - Xx - Yy - Zz)
            + (Rx + Xr + Yz - Zy) i
            + (Ry - Xz + Yr + Zx) j
            + (Rz + Xy - Yx + Zr) k

with every product term a real convolution (or matrix product). This is
equivalent to one real operation whose weight matrix has the 4x4 block
structure [[R,-X,-Y,-Z],[X,R,-Z,Y],[Y,Z,R,-X],[Z,-Y,X,R]]; the test suite
uses that block form as an independent oracle.

Activations, pooling and dropout are "split": the same real operation is
applied to each component plane, with dropout masking whole quaternion
units so the four components of a unit are kept or dropped together.

Weights come from a polar initializer: per weight, a purely imaginary
quaternion with components uniform in [0,1) is normalized to a unit axis
n, a phase theta is drawn uniform on [-pi, pi], and a magnitude phi is
drawn as sigma times a Chi(4) variate. Then::

    w_r = phi * cos(theta),   w_{x,y,z} = phi * n_{x,y,z} * sin(theta)

so |w| = phi and E|w|^2 = 4*sigma^2 exactly, with sigma = 1/sqrt(2*n_in)
under the He criterion (1/sqrt(2*(n_in+n_out)) under Glorot).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .autodiff import Tensor, conv2d, matmul, maxpool1d

__all__ = [
    "QTensor",
    "QConv2d",
    "QDense",
    "QPReLU",
    "split_activation",
    "split_maxpool_freq",
    "quaternion_dropout",
    "quaternion_init",
    "InitSpec",
    "RealConv2d",
    "RealDense",
    "RealPReLU",
]


class QTensor:
    """Four real component planes of one shared shape."""

    __slots__ = ("r", "x", "y", "z")

    def __init__(self, r: Tensor, x: Tensor, y: Tensor, z: Tensor):
        shapes = {r.shape, x.shape, y.shape, z.shape}
        if len(shapes) != 1:
            raise ValueError(f"QTensor planes must share one shape, got {shapes}")
        self.r, self.x, self.y, self.z = r, x, y, z

    @classmethod
    def from_arrays(cls, r, x, y, z, requires_grad: bool = False) -> "QTensor":
        return cls(Tensor(r, requires_grad), Tensor(x, requires_grad),
                   Tensor(y, requires_grad), Tensor(z, requires_grad))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.r.shape

    @property
    def components(self) -> tuple[Tensor, Tensor, Tensor, Tensor]:
        return (self.r, self.x, self.y, self.z)

    def map(self, fn: Callable[[Tensor], Tensor]) -> "QTensor":
        return QTensor(fn(self.r), fn(self.x), fn(self.y), fn(self.z))

    def numpy(self) -> np.ndarray:
        """Stack the component planes along a leading axis of size 4."""
        return np.stack([c.data for c in self.components])


def split_activation(q: QTensor, fn: Callable[[Tensor], Tensor]) -> QTensor:
    """Apply a real scalar activation independently to each plane."""
    return q.map(fn)


def split_maxpool_freq(q: QTensor, pool_width: int) -> QTensor:
    """Component-wise max pooling along the frequency axis (axis 2).

    Input planes are (batch, q_channels, freq, time); the time axis is
    untouched and a ragged frequency tail is truncated.
    """
    return q.map(lambda t: maxpool1d(t, pool_width, axis=2))


def quaternion_dropout(q: QTensor, rate: float, rng: np.random.Generator | None,
                       training: bool) -> QTensor:
    """Inverted dropout of whole quaternion units.

    One Bernoulli(1-rate) mask is drawn per unit and applied to all four
    component planes, scaled by 1/(1-rate). Identity when not training or
    when rate is 0.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return q
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(q.shape) >= rate) / (1.0 - rate)
    m = Tensor(mask)
    return q.map(lambda t: t * m)


@dataclass(frozen=True)
class InitSpec:
    """Fan-in/fan-out (in quaternion units x receptive field) and criterion."""

    n_in: int
    n_out: int
    criterion: str = "he"

    def sigma(self) -> float:
        if self.n_in < 1:
            raise ValueError(f"n_in must be >= 1, got {self.n_in}")
        if self.criterion == "he":
            return 1.0 / np.sqrt(2.0 * self.n_in)
        if self.criterion == "glorot":
            return 1.0 / np.sqrt(2.0 * (self.n_in + self.n_out))
        raise ValueError(f"unknown init criterion {self.criterion!r}")


def compose_polar(phi: np.ndarray, theta: np.ndarray,
                  axis: np.ndarray) -> tuple[np.ndarray, ...]:
    """Combine magnitude, phase and unit imaginary axis into components:
    (phi*cos(theta), phi*axis*sin(theta))."""
    w_r = phi * np.cos(theta)
    sin_t = phi * np.sin(theta)
    return (w_r, sin_t * axis[..., 0], sin_t * axis[..., 1], sin_t * axis[..., 2])


def quaternion_init(spec: InitSpec, shape: tuple[int, ...],
                    rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Draw the four component arrays of a quaternion weight tensor.

    Returns (r, x, y, z) arrays of the given shape. Degenerate
    zero-length imaginary draws are re-sampled.
    """
    sigma = spec.sigma()
    phi = sigma * np.sqrt((rng.standard_normal(shape + (4,)) ** 2).sum(axis=-1))
    theta = rng.uniform(-np.pi, np.pi, size=shape)

    axis = rng.random(shape + (3,))
    nrm = np.linalg.norm(axis, axis=-1)
    while True:
        bad = nrm < 1e-12
        if not bad.any():
            break
        axis[bad] = rng.random((int(bad.sum()), 3))
        nrm = np.linalg.norm(axis, axis=-1)
    axis = axis / nrm[..., None]
    return compose_polar(phi, theta, axis)


def _he_real_init(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class QConv2d:
    """Quaternion 2-D convolution via the Hamilton product.

    Weight planes have shape (out_q, in_q, kh, kw); the bias is one
    quaternion per output channel, initialized to zero.
    """

    def __init__(self, in_q: int, out_q: int, kernel: tuple[int, int],
                 rng: np.random.Generator, stride: tuple[int, int] = (1, 1),
                 padding: tuple[int, int] | str = "same", bias: bool = True,
                 criterion: str = "he"):
        kh, kw = kernel
        self.in_q, self.out_q, self.kernel = in_q, out_q, kernel
        self.stride = stride
        if padding == "same":
            if kh % 2 == 0 or kw % 2 == 0:
                raise ValueError("'same' padding needs odd kernel extents")
            padding = ((kh - 1) // 2, (kw - 1) // 2)
        self.padding = padding

        spec = InitSpec(n_in=in_q * kh * kw, n_out=out_q * kh * kw, criterion=criterion)
        shape = (out_q, in_q, kh, kw)
        planes = quaternion_init(spec, shape, rng)
        self.w = QTensor(*(Tensor(p, requires_grad=True) for p in planes))
        self.bias = None
        if bias:
            self.bias = QTensor(*(Tensor(np.zeros((out_q, 1, 1)), requires_grad=True)
                                  for _ in range(4)))

    def __call__(self, q: QTensor) -> QTensor:
        if q.shape[1] != self.in_q:
            raise ValueError(f"expected {self.in_q} quaternion channels, got {q.shape[1]}")
        c = lambda t, k: conv2d(t, k, self.stride, self.padding)
        r, x, y, z = q.components
        R, X, Y, Z = self.w.components
        out = QTensor(
            c(r, R) - c(x, X) - c(y, Y) - c(z, Z),
            c(x, R) + c(r, X) + c(z, Y) - c(y, Z),
            c(y, R) - c(z, X) + c(r, Y) + c(x, Z),
            c(z, R) + c(y, X) - c(x, Y) + c(r, Z),
        )
        if self.bias is not None:
            out = QTensor(*(p + b for p, b in zip(out.components, self.bias.components)))
        return out

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        named = [(f"{prefix}.w.{c}", t) for c, t in zip("rxyz", self.w.components)]
        if self.bias is not None:
            named += [(f"{prefix}.b.{c}", t) for c, t in zip("rxyz", self.bias.components)]
        return named

    def weight_count(self) -> int:
        return 4 * self.out_q * self.in_q * self.kernel[0] * self.kernel[1]


class QDense:
    """Quaternion dense layer: Hamilton matrix-vector product plus bias.

    Inputs are row-major batches (n, in_q) per component plane; weight
    planes have shape (out_q, in_q).
    """

    def __init__(self, in_q: int, out_q: int, rng: np.random.Generator,
                 bias: bool = True, criterion: str = "he"):
        self.in_q, self.out_q = in_q, out_q
        spec = InitSpec(n_in=in_q, n_out=out_q, criterion=criterion)
        planes = quaternion_init(spec, (out_q, in_q), rng)
        self.w = QTensor(*(Tensor(p, requires_grad=True) for p in planes))
        self.bias = None
        if bias:
            self.bias = QTensor(*(Tensor(np.zeros(out_q), requires_grad=True)
                                  for _ in range(4)))

    def __call__(self, q: QTensor) -> QTensor:
        if q.shape[-1] != self.in_q:
            raise ValueError(f"expected {self.in_q} quaternion inputs, got {q.shape[-1]}")
        r, x, y, z = q.components
        Rt, Xt, Yt, Zt = (t.transpose((1, 0)) for t in self.w.components)
        m = matmul
        out = QTensor(
            m(r, Rt) - m(x, Xt) - m(y, Yt) - m(z, Zt),
            m(x, Rt) + m(r, Xt) + m(z, Yt) - m(y, Zt),
            m(y, Rt) - m(z, Xt) + m(r, Yt) + m(x, Zt),
            m(z, Rt) + m(y, Xt) - m(x, Yt) + m(r, Zt),
        )
        if self.bias is not None:
            out = QTensor(*(p + b for p, b in zip(out.components, self.bias.components)))
        return out

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        named = [(f"{prefix}.w.{c}", t) for c, t in zip("rxyz", self.w.components)]
        if self.bias is not None:
            named += [(f"{prefix}.b.{c}", t) for c, t in zip("rxyz", self.bias.components)]
        return named

    def weight_count(self) -> int:
        return 4 * self.out_q * self.in_q


class QPReLU:
    """Split PReLU with one learnable slope per quaternion channel.

    The slope is shared by the four components of a channel. Channels are
    axis 1 for 4-D plane shapes (batch, q, freq, time) and the last axis
    for 2-D (n, q) shapes.
    """

    def __init__(self, n_channels: int, init: float = 0.25):
        self.n_channels = n_channels
        self.slopes = Tensor(np.full(n_channels, init), requires_grad=True)

    def _apply(self, t: Tensor) -> Tensor:
        if t.data.ndim == 4:
            if t.shape[1] != self.n_channels:
                raise ValueError(f"PReLU has {self.n_channels} slopes, input has "
                                 f"{t.shape[1]} channels")
            a = self.slopes.reshape((self.n_channels, 1, 1))
        elif t.data.ndim == 2:
            if t.shape[-1] != self.n_channels:
                raise ValueError(f"PReLU has {self.n_channels} slopes, input has "
                                 f"{t.shape[-1]} channels")
            a = self.slopes
        else:
            raise ValueError(f"PReLU expects 2-D or 4-D planes, got {t.shape}")
        # max(v, a*v) for a <= 1: relu(v) - a * relu(-v)
        return t.relu() - a * (-t).relu()

    def __call__(self, q: QTensor) -> QTensor:
        return q.map(self._apply)

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [(f"{prefix}.slopes", self.slopes)]


# -- real-valued counterparts (baseline model and output head) ------------


class RealConv2d:
    def __init__(self, c_in: int, c_out: int, kernel: tuple[int, int],
                 rng: np.random.Generator, stride: tuple[int, int] = (1, 1),
                 padding: tuple[int, int] | str = "same", bias: bool = True):
        kh, kw = kernel
        self.c_in, self.c_out, self.kernel = c_in, c_out, kernel
        self.stride = stride
        if padding == "same":
            padding = ((kh - 1) // 2, (kw - 1) // 2)
        self.padding = padding
        self.w = Tensor(_he_real_init((c_out, c_in, kh, kw), c_in * kh * kw, rng),
                        requires_grad=True)
        self.b = Tensor(np.zeros((c_out, 1, 1)), requires_grad=True) if bias else None

    def __call__(self, t: Tensor) -> Tensor:
        out = conv2d(t, self.w, self.stride, self.padding)
        return out + self.b if self.b is not None else out

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        named = [(f"{prefix}.w", self.w)]
        if self.b is not None:
            named.append((f"{prefix}.b", self.b))
        return named

    def weight_count(self) -> int:
        return self.c_out * self.c_in * self.kernel[0] * self.kernel[1]


class RealDense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        self.n_in, self.n_out = n_in, n_out
        self.w = Tensor(_he_real_init((n_out, n_in), n_in, rng), requires_grad=True)
        self.b = Tensor(np.zeros(n_out), requires_grad=True) if bias else None

    def __call__(self, t: Tensor) -> Tensor:
        out = matmul(t, self.w.transpose((1, 0)))
        return out + self.b if self.b is not None else out

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        named = [(f"{prefix}.w", self.w)]
        if self.b is not None:
            named.append((f"{prefix}.b", self.b))
        return named

    def weight_count(self) -> int:
        return self.n_out * self.n_in


class RealPReLU:
    def __init__(self, n_channels: int, init: float = 0.25):
        self.n_channels = n_channels
        self.slopes = Tensor(np.full(n_channels, init), requires_grad=True)

    def __call__(self, t: Tensor) -> Tensor:
        a = self.slopes.reshape((self.n_channels, 1, 1)) if t.data.ndim == 4 else self.slopes
        return t.relu() - a * (-t).relu()

    def parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [(f"{prefix}.slopes", self.slopes)]


def block_weight_matrix(planes: Sequence[np.ndarray]) -> np.ndarray:
    """Real block matrix equivalent of a quaternion weight.

    For dense planes (out_q, in_q) returns the (4*out_q, 4*in_q) matrix
    [[R,-X,-Y,-Z],[X,R,-Z,Y],[Y,Z,R,-X],[Z,-Y,X,R]]; for conv planes
    (out_q, in_q, kh, kw) the blocks are stacked along the channel axes,
    giving a (4*out_q, 4*in_q, kh, kw) kernel.
    """
    R, X, Y, Z = planes
    rows = [
        [R, -X, -Y, -Z],
        [X, R, -Z, Y],
        [Y, Z, R, -X],
        [Z, -Y, X, R],
    ]
    return np.concatenate([np.concatenate(row, axis=1) for row in rows], axis=0)
