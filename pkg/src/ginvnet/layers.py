"""Building blocks for the invariant networks.

All layers take a leading batch axis. ``sigma_pi`` and ``f_in_forward`` also
accept a single unbatched item.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .permgroup import GroupError, PermutationGroup
from .tensor import (
    Tensor,
    affine,
    conv1d_valid,
    count_multiplications,
    mean,
    reduce_prod,
    reduce_sum,
    reshape,
    take,
    tanh_act,
)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base class; subclasses expose named parameters and a forward call."""

    def params(self) -> dict[str, Tensor]:
        return {}

    def weights(self) -> list[Tensor]:
        """Parameters subject to L2 regularisation (no biases)."""
        return []

    def describe(self) -> str:
        return type(self).__name__

    def __call__(self, x: Tensor) -> Tensor:
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, activation: bool, rng, dtype=np.float32):
        self.W = Tensor(glorot_uniform(rng, (n_in, n_out), n_in, n_out, dtype), requires_grad=True)
        self.b = Tensor(np.zeros(n_out, dtype=dtype), requires_grad=True)
        self.activation = activation

    def params(self):
        return {"W": self.W, "b": self.b}

    def weights(self):
        return [self.W]

    def describe(self):
        n_in, n_out = self.W.shape
        return f"FC({n_in}->{n_out}{', tanh' if self.activation else ''})"

    def __call__(self, x):
        y = affine(x, self.W, self.b)
        return tanh_act(y) if self.activation else y


class Conv1D(Layer):
    """Valid 1-D convolution over axis -2 of ``(..., L, c_in)`` inputs."""

    def __init__(self, k: int, c_in: int, c_out: int, activation: bool, rng, dtype=np.float32):
        self.K = Tensor(
            glorot_uniform(rng, (k, c_in, c_out), k * c_in, k * c_out, dtype), requires_grad=True
        )
        self.b = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True)
        self.activation = activation

    def params(self):
        return {"K": self.K, "b": self.b}

    def weights(self):
        return [self.K]

    def describe(self):
        k, c_in, c_out = self.K.shape
        return f"Conv1D({k}x1, {c_in}->{c_out}{', tanh' if self.activation else ''})"

    def __call__(self, x):
        y = conv1d_valid(x, self.K, self.b)
        return tanh_act(y) if self.activation else y


def circular_pad_index(n: int, k: int) -> np.ndarray:
    if k % 2 == 0:
        raise ValueError(f"circular padding needs an odd kernel size, got {k}")
    if k > n + 1:
        raise ValueError(f"kernel size {k} too large for length {n}")
    h = (k - 1) // 2
    return np.array([(i - h) % n for i in range(n + k - 1)], dtype=np.intp)


def circular_pad(x: Tensor, k: int) -> Tensor:
    """Wrap rows so that a valid ``k``-convolution keeps the length.

    ``[A, B, C, D]`` with ``k=3`` becomes ``[D, A, B, C, D, A]``.
    """
    return take(x, circular_pad_index(x.shape[-2], k), axis=x.ndim - 2)


class CircularPad(Layer):
    def __init__(self, k: int):
        self.k = k

    def describe(self):
        return f"CircularPad({self.k})"

    def __call__(self, x):
        return circular_pad(x, self.k)


class Reshape(Layer):
    """Reshape the per-item tail, keeping the batch axis."""

    def __init__(self, tail: Sequence[int]):
        self.tail = tuple(tail)

    def describe(self):
        return "Reshape(" + "x".join(map(str, self.tail)) + ")"

    def __call__(self, x):
        return reshape(x, (x.shape[0],) + self.tail)


class Flatten(Reshape):
    def __init__(self, size: int):
        super().__init__((size,))

    def describe(self):
        return f"Flatten({self.tail[0]})"


class Squeeze(Layer):
    """Drop a trailing singleton output axis."""

    def __call__(self, x):
        return reshape(x, x.shape[:-1])


class Sequential(Layer):
    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    def params(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, p in layer.params().items():
                out[f"{i}.{name}"] = p
        return out

    def weights(self):
        return [w for layer in self.layers for w in layer.weights()]

    def describe(self):
        return " -> ".join(layer.describe() for layer in self.layers)

    def __call__(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


def f_in_forward(phi: Callable[[Tensor], Tensor], x: Tensor, n: int, n_mid: int) -> Tensor:
    """Apply the row network and split each row's output into ``n`` heads.

    ``phi`` maps ``(B, n, n_in)`` to ``(B, n, n * n_mid)``. The result has
    ``out[b, i, j, :] = phi_j(x_i)``.
    """
    single = x.ndim == 2
    if single:
        x = reshape(x, (1,) + x.shape)
    if x.shape[1] != n:
        raise ValueError(f"expected {n} rows, got input shape {x.shape}")
    y = phi(x)
    if y.shape[1:] != (n, n * n_mid):
        raise ValueError(f"phi output {y.shape[1:]} != ({n}, {n * n_mid})")
    y = reshape(y, (y.shape[0], n, n, n_mid))
    return reshape(y, y.shape[1:]) if single else y


class EquivariantInput(Layer):
    def __init__(self, trunk: Sequential, n: int, n_mid: int):
        self.trunk = trunk
        self.n = n
        self.n_mid = n_mid
        self.activation_size = 0

    def params(self):
        return self.trunk.params()

    def weights(self):
        return self.trunk.weights()

    def describe(self):
        return f"{self.trunk.describe()} -> Reshape({self.n}x{self.n}x{self.n_mid})"

    def __call__(self, x):
        y = f_in_forward(self.trunk, x, self.n, self.n_mid)
        self.activation_size = y.size // y.shape[0]
        return y


def _sigma_pi_index(group: PermutationGroup) -> np.ndarray:
    n = group.degree
    # flat position of features[sigma_g(j), j] in the (n*n) plane
    return group.index_array() * n + np.arange(n)[None, :]


def sigma_pi(features: Tensor, group: PermutationGroup) -> Tensor:
    """Sum over group elements of products along the permuted diagonal.

    For each channel ``c``: ``sum_g prod_j features[sigma_g(j), j, c]``,
    vectorised as gather -> product over ``j`` -> sum over ``g``.
    """
    single = features.ndim == 3
    if single:
        features = reshape(features, (1,) + features.shape)
    B, n1, n2, c = features.shape
    if n1 != group.degree or n2 != group.degree:
        raise GroupError(f"features {features.shape[1:3]} do not match group degree {group.degree}")
    flat = reshape(features, (B, n1 * n2, c))
    picked = take(flat, _sigma_pi_index(group), axis=1)  # (B, m, n, c)
    out = reduce_sum(reduce_prod(picked, axis=2), axis=1)
    return reshape(out, (c,)) if single else out


def sigma_pi_naive(features, group: PermutationGroup) -> np.ndarray:
    """Literal double loop over group elements and columns (test oracle)."""
    f = np.asarray(features.data if isinstance(features, Tensor) else features, dtype=np.float64)
    n = group.degree
    if f.shape[:2] != (n, n):
        raise GroupError(f"features {f.shape[:2]} do not match group degree {n}")
    out = np.zeros(f.shape[2])
    for g in group.elements:
        term = np.ones(f.shape[2])
        for j in range(n):
            term = term * f[g(j), j]
        out += term
    return out


class SigmaPi(Layer):
    def __init__(self, group: PermutationGroup, n_mid: int):
        self.group = group
        self.n_mid = n_mid
        self.mult_counter = 0

    def describe(self):
        return f"SigmaPi({self.group.label or 'G'}, |G|={self.group.order})"

    def __call__(self, x):
        with count_multiplications() as c:
            y = sigma_pi(x, self.group)
        batch = 1 if x.ndim == 3 else x.shape[0]
        self.mult_counter = c.count // batch
        return y


def permute_rows_batched(x: Tensor, group: PermutationGroup, axis: int = 1) -> Tensor:
    """All ``g(x)`` at once: ``(B, n, ...)`` -> ``(B, m, n, ...)``."""
    return take(x, group.index_array(), axis=axis)


def reynolds_average(model: Callable[[Tensor], Tensor], group: PermutationGroup, x: Tensor) -> Tensor:
    """Mean of ``model(g(x))`` over the group; ``model`` maps ``(B, n, d)`` to ``(B,)``."""
    single = x.ndim == 2
    if single:
        x = reshape(x, (1,) + x.shape)
    if x.shape[1] != group.degree:
        raise GroupError(f"input has {x.shape[1]} rows, group degree is {group.degree}")
    B, m = x.shape[0], group.order
    stacked = permute_rows_batched(x, group)
    y = model(reshape(stacked, (B * m,) + x.shape[1:]))
    y = mean(reshape(y, (B, m) + y.shape[1:]), axis=1)
    return reshape(y, y.shape[1:]) if single else y
