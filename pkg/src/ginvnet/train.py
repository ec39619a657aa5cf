"""Losses, metrics, Adam, the training loop and multi-seed aggregation."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset
from .models import Model
from .tensor import Tensor, abs_, add, mean, mul, square_sum

log = logging.getLogger(__name__)

PRECISIONS = {"f32": np.float32, "f64": np.float64}


class TrainingDiverged(RuntimeError):
    pass


def mae(pred, target) -> float:
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


def mape(pred, target) -> float:
    """Mean absolute percentage error, in percent."""
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if np.any(target == 0):
        raise ValueError("MAPE undefined for zero targets")
    return float(np.mean(np.abs(pred - target) / np.abs(target)) * 100.0)


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 16
    learning_rate: float = 1e-3
    l2_coefficient: float = 1e-5
    seeds: tuple[int, ...] = tuple(range(10))
    precision: str = "f32"

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0 or self.l2_coefficient < 0:
            raise ValueError("learning rate must be positive and l2 non-negative")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]


class Adam:
    def __init__(self, params: Sequence[Tensor], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p.data -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.dtype)


def l2_penalty(model: Model) -> Tensor:
    ws = model.weights()
    total = square_sum(ws[0])
    for w in ws[1:]:
        total = add(total, square_sum(w))
    return total


def loss_fn(model: Model, x, y, l2: float) -> Tensor:
    pred = model.forward(x)
    err = mean(abs_(pred - Tensor(y, dtype=model.dtype)))
    if l2:
        err = add(err, mul(l2_penalty(model), np.asarray(l2, dtype=model.dtype)))
    return err


@dataclass
class RunMetrics:
    seed: int = 0
    curves: dict = field(default_factory=lambda: {
        "train_mae": [], "val_mae": [], "train_mape": [], "val_mape": []})
    final: dict = field(default_factory=dict)
    best_epoch: int = 0
    latency_ms: tuple[float, float] = (float("nan"), float("nan"))
    mult_count: int | None = None
    activation_size: int | None = None
    param_count: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def curves_csv(self) -> str:
        c = self.curves
        lines = ["epoch,train_mae,val_mae,train_mape,val_mape"]
        for e in range(len(c["val_mae"])):
            lines.append(",".join(
                [str(e)] + [repr(float(c[k][e])) for k in ("train_mae", "val_mae", "train_mape", "val_mape")]
            ))
        return "\n".join(lines) + "\n"


def _safe_mape(pred, target) -> float:
    try:
        return mape(pred, target)
    except ValueError:
        return float("nan")


def evaluate(model: Model, inputs, targets) -> tuple[float, float]:
    pred = model.predict(inputs)
    return mae(pred, targets), _safe_mape(pred, targets)


def train_model(model: Model, dataset: Dataset, cfg: TrainConfig, seed: int = 0,
                callback: Callable[[int, RunMetrics], None] | None = None) -> tuple[Model, RunMetrics]:
    """Minimise MAE + L2 with Adam; return the best-validation parameters."""
    rng = np.random.default_rng(seed)
    tr, va = dataset.train, dataset.val
    x_tr = tr.inputs.astype(model.dtype)
    y_tr = tr.targets.astype(model.dtype)
    params = list(model.params().values())
    opt = Adam(params, lr=cfg.learning_rate)
    metrics = RunMetrics(seed=seed, param_count=model.param_count())

    def record():
        for split, (xs, ys) in (("train", (tr.inputs, tr.targets)), ("val", (va.inputs, va.targets))):
            m_ae, m_ape = evaluate(model, xs, ys)
            metrics.curves[f"{split}_mae"].append(m_ae)
            metrics.curves[f"{split}_mape"].append(m_ape)
        return metrics.curves["val_mae"][-1]

    best_val = record()
    best_state, best_epoch = model.state_dict(), 0
    n = len(y_tr)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            opt.zero_grad()
            loss = loss_fn(model, x_tr[idx], y_tr[idx], cfg.l2_coefficient)
            if not np.isfinite(loss.item()):
                raise TrainingDiverged(
                    f"{model.kind}: non-finite loss {loss.item()} at epoch {epoch}, seed {seed}"
                )
            loss.backward()
            opt.step()
        val = record()
        if val < best_val:
            best_val, best_state, best_epoch = val, model.state_dict(), epoch
        if callback is not None:
            callback(epoch, metrics)

    model.load_state_dict(best_state)
    metrics.best_epoch = best_epoch
    log.debug("%s seed %d: best val MAE %.6g at epoch %d", model.kind, seed, best_val, best_epoch)
    for split in ("train", "val", "test"):
        s = dataset.split(split)
        m_ae, m_ape = evaluate(model, s.inputs, s.targets)
        metrics.final[f"{split}_mae"] = m_ae
        metrics.final[f"{split}_mape"] = m_ape
    sp = model.sigma_pi_layer()
    if sp is not None:
        model.forward(dataset.test.inputs[0])
        metrics.mult_count = sp.mult_counter
        metrics.activation_size = model.input_layer().activation_size
    return model, metrics


def measure_latency(model: Model, x, repeats: int = 300, batch_size: int = 16) -> tuple[float, float]:
    """Mean and std (ms) of ``repeats`` timed forward passes at a fixed batch size."""
    xb = np.asarray(x)[:batch_size].astype(model.dtype)
    model.forward(xb)  # warm-up
    times = np.empty(repeats)
    for i in range(repeats):
        t0 = time.perf_counter()
        model.forward(xb)
        times[i] = (time.perf_counter() - t0) * 1e3
    return float(times.mean()), float(times.std())


@dataclass
class AggregateMetrics:
    """Mean and population std over seeds of the best-checkpoint metrics."""

    mean: dict
    std: dict
    runs: list[RunMetrics]

    @classmethod
    def from_runs(cls, runs: Sequence[RunMetrics]) -> "AggregateMetrics":
        keys = list(runs[0].final)
        vals = {k: np.array([r.final[k] for r in runs]) for k in keys}
        lat = np.array([r.latency_ms[0] for r in runs])
        mean = {k: float(v.mean()) for k, v in vals.items()}
        std = {k: float(v.std()) for k, v in vals.items()}
        mean["latency_ms"], std["latency_ms"] = float(lat.mean()), float(lat.std())
        return cls(mean, std, list(runs))

    def to_dict(self) -> dict:
        r0 = self.runs[0]
        return {
            "mean": self.mean,
            "std": self.std,
            "seeds": [r.seed for r in self.runs],
            "param_count": r0.param_count,
            "mult_count": r0.mult_count,
            "activation_size": r0.activation_size,
            "best_epochs": [r.best_epoch for r in self.runs],
        }


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GINV_THREADS", "1")))
    except ValueError:
        return 1


def run_seeds(job: Callable[[int], RunMetrics], seeds: Sequence[int],
              workers: int | None = None) -> list[RunMetrics]:
    """Run ``job`` per seed, in worker processes when more than one is allowed.

    ``job`` must be picklable for parallel execution.
    """
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(seeds) <= 1:
        return [job(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
        return list(pool.map(job, seeds))
