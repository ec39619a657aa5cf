"""The five compared architectures.

``FC_Ginv`` / ``Conv1D_Ginv`` compose an equivariant row network, the
sum-product layer and an MLP head. ``FC_Gavg`` / ``Conv1D_Gavg`` average a
plain network over the group. ``Maron`` feeds orbit-sum polynomial features
into an MLP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .invariants import PolynomialFeatures, generating_candidates
from .layers import (
    CircularPad,
    Conv1D,
    Dense,
    EquivariantInput,
    Flatten,
    Layer,
    Sequential,
    SigmaPi,
    Squeeze,
    reynolds_average,
)
from .permgroup import GroupError, PermutationGroup, is_rotation_subgroup, lift, parse_group
from .tensor import Tensor, reshape

KINDS = ("FC_Ginv", "Conv1D_Ginv", "FC_Gavg", "Conv1D_Gavg", "Maron")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    group: str
    n: int
    n_in: int
    n_mid: int = 0
    task: str = "poly"

    def to_config(self) -> str:
        return "\n".join(
            ["[model]"] + [f"{k}={getattr(self, k)}" for k in ("kind", "group", "n", "n_in", "n_mid", "task")]
        )


class Model:
    """A built network: layer plan, named parameters and a forward pass."""

    def __init__(self, spec: ModelSpec, group: PermutationGroup, net: Sequential,
                 reynolds: bool = False, features: PolynomialFeatures | None = None,
                 dtype=np.float32):
        self.spec = spec
        self.group = group
        self.net = net
        self.reynolds = reynolds
        self.features = features
        self.dtype = np.dtype(dtype)

    @property
    def kind(self) -> str:
        return self.spec.kind

    def params(self) -> dict[str, Tensor]:
        return self.net.params()

    def weights(self) -> list[Tensor]:
        return self.net.weights()

    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def layer_plan(self) -> list[str]:
        plan = []
        if self.features is not None:
            plan.append(f"PolynomialFeatures({self.features.n_features})")
        plan += [layer.describe() for layer in self.net.layers]
        if self.reynolds:
            plan.append(f"ReynoldsAverage(|G|={self.group.order})")
        return plan

    def sigma_pi_layer(self) -> SigmaPi | None:
        for layer in self.net.layers:
            if isinstance(layer, SigmaPi):
                return layer
        return None

    def input_layer(self) -> EquivariantInput | None:
        for layer in self.net.layers:
            if isinstance(layer, EquivariantInput):
                return layer
        return None

    def _prepare(self, x) -> Tensor:
        if self.features is not None:
            arr = x.data if isinstance(x, Tensor) else np.asarray(x)
            return Tensor(self.features(arr.reshape(arr.shape[:-2] + (-1,))), dtype=self.dtype)
        if isinstance(x, Tensor):
            return x
        return Tensor(np.asarray(x), dtype=self.dtype)

    def forward(self, x) -> Tensor:
        """``(B, n, n_in) -> (B,)``; a single ``(n, n_in)`` item gives a scalar."""
        xt = self._prepare(x)
        single = xt.ndim == (1 if self.features is not None else 2)
        if single:
            xt = reshape(xt, (1,) + xt.shape)
        if self.reynolds:
            y = reynolds_average(self.net, self.group, xt)
        else:
            y = self.net(xt)
        return reshape(y, ()) if single else y

    __call__ = forward

    def predict(self, x, batch_size: int = 4096) -> np.ndarray:
        x = np.asarray(x)
        return np.concatenate(
            [self.forward(x[i:i + batch_size]).data for i in range(0, len(x), batch_size)]
        ) if len(x) else np.zeros(0, dtype=self.dtype)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        params = self.params()
        if set(state) != set(params):
            raise KeyError(f"parameter names differ: {sorted(set(state) ^ set(params))}")
        for k, p in params.items():
            if state[k].shape != p.shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {p.shape}")
            p.data[...] = state[k]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _head(sizes, rng, dtype) -> list[Layer]:
    """tanh hidden layers, linear output, trailing singleton squeezed."""
    layers: list[Layer] = [
        Dense(a, b, activation=(i < len(sizes) - 2), rng=rng, dtype=dtype)
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))
    ]
    return layers + [Squeeze()]


def build_fc_ginv(group: PermutationGroup, n: int, n_in: int, n_mid: int,
                  seed=0, dtype=np.float32) -> Model:
    if group.degree != n:
        raise GroupError(f"group degree {group.degree} != n={n}")
    rng = _rng(seed)
    trunk = Sequential([
        Dense(n_in, 16, True, rng, dtype),
        Dense(16, 64, True, rng, dtype),
        Dense(64, n * n_mid, False, rng, dtype),
    ])
    net = Sequential(
        [EquivariantInput(trunk, n, n_mid), SigmaPi(group, n_mid)]
        + _head([n_mid, 32, 1], rng, dtype)
    )
    return Model(ModelSpec("FC_Ginv", group.label, n, n_in, n_mid), group, net, dtype=dtype)


def build_conv_ginv(group: PermutationGroup, n: int, n_in: int, n_mid: int,
                    seed=0, dtype=np.float32) -> Model:
    """Cyclic-padded convolutions as the row network; needs a rotation group."""
    if group.degree != n:
        raise GroupError(f"group degree {group.degree} != n={n}")
    if not is_rotation_subgroup(group):
        raise GroupError(
            f"Conv1D_Ginv needs a group of cyclic shifts of (0 ... {n - 1}); got {group.label}"
        )
    rng = _rng(seed)
    trunk = Sequential([
        CircularPad(3),
        Conv1D(3, n_in, 32, True, rng, dtype),
        Conv1D(1, 32, n * n_mid, False, rng, dtype),
    ])
    net = Sequential(
        [EquivariantInput(trunk, n, n_mid), SigmaPi(group, n_mid)]
        + _head([n_mid, 32, 32, 1], rng, dtype)
    )
    return Model(ModelSpec("Conv1D_Ginv", group.label, n, n_in, n_mid), group, net, dtype=dtype)


_GAVG_FC = {"poly": [89, 192, 32, 1], "area": [64, 18, 1]}
_GAVG_CONV = {"poly": 118, "area": 2}
_MARON_MLP = {"poly": [48, 192, 32, 1], "area": [40, 1]}


def _task_dims(task: str, group: PermutationGroup, n_in: int | None) -> int:
    if task not in _GAVG_FC:
        raise ValueError(f"unknown task {task!r}")
    return n_in if n_in is not None else (1 if task == "poly" else 2)


def build_fc_gavg(task: str, group: PermutationGroup, n_in: int | None = None,
                  seed=0, dtype=np.float32) -> Model:
    n_in = _task_dims(task, group, n_in)
    n = group.degree
    rng = _rng(seed)
    net = Sequential([Flatten(n * n_in)] + _head([n * n_in] + _GAVG_FC[task], rng, dtype))
    return Model(ModelSpec("FC_Gavg", group.label, n, n_in, 0, task), group, net,
                 reynolds=True, dtype=dtype)


def build_conv_gavg(task: str, group: PermutationGroup, n_in: int | None = None,
                    seed=0, dtype=np.float32) -> Model:
    n_in = _task_dims(task, group, n_in)
    n = group.degree
    width = _GAVG_CONV[task]
    rng = _rng(seed)
    net = Sequential(
        [
            CircularPad(3),
            Conv1D(3, n_in, 32, True, rng, dtype),
            Conv1D(1, 32, width, True, rng, dtype),
            Flatten(n * width),
        ]
        + _head([n * width, 32, 1], rng, dtype)
    )
    return Model(ModelSpec("Conv1D_Gavg", group.label, n, n_in, 0, task), group, net,
                 reynolds=True, dtype=dtype)


def maron_features(group: PermutationGroup, n_in: int, max_degree: int | None = None,
                   cap: int | None = None) -> PolynomialFeatures:
    lifted = lift(group, n_in)
    kwargs = {} if cap is None else {"cap": cap}
    polys = generating_candidates(lifted, lifted.degree,
                                  group.order if max_degree is None else max_degree, **kwargs)
    return PolynomialFeatures(polys)


def build_maron(group: PermutationGroup, n: int, n_in: int, task: str = "poly",
                seed=0, dtype=np.float32, max_degree: int | None = None) -> Model:
    """Orbit sums of all monomials of degree <= |G|, evaluated exactly, then an MLP."""
    if group.degree != n:
        raise GroupError(f"group degree {group.degree} != n={n}")
    if task not in _MARON_MLP:
        raise ValueError(f"unknown task {task!r}")
    feats = maron_features(group, n_in, max_degree)
    rng = _rng(seed)
    net = Sequential(_head([feats.n_features] + _MARON_MLP[task], rng, dtype))
    return Model(ModelSpec("Maron", group.label, n, n_in, 0, task), group, net,
                 features=feats, dtype=dtype)


def build_model(spec: ModelSpec, seed=0, dtype=np.float32, group: PermutationGroup | None = None) -> Model:
    group = group if group is not None else parse_group(spec.group)
    if spec.kind == "FC_Ginv":
        return build_fc_ginv(group, spec.n, spec.n_in, spec.n_mid, seed, dtype)
    if spec.kind == "Conv1D_Ginv":
        return build_conv_ginv(group, spec.n, spec.n_in, spec.n_mid, seed, dtype)
    if spec.kind == "FC_Gavg":
        return build_fc_gavg(spec.task, group, spec.n_in, seed, dtype)
    if spec.kind == "Conv1D_Gavg":
        return build_conv_gavg(spec.task, group, spec.n_in, seed, dtype)
    if spec.kind == "Maron":
        return build_maron(group, spec.n, spec.n_in, spec.task, seed, dtype)
    raise ValueError(f"unknown architecture {spec.kind!r}; choose from {', '.join(KINDS)}")


def param_count(model: Model) -> int:
    return model.param_count()


def forward(model: Model, x) -> Tensor:
    return model.forward(x)
