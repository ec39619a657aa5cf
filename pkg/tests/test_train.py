import numpy as np
import pytest

from ginvnet.data import Dataset, Split, gen_poly_dataset
from ginvnet.models import ModelSpec, build_model
from ginvnet.tensor import Tensor, square_sum
from ginvnet.train import (
    Adam,
    AggregateMetrics,
    RunMetrics,
    TrainConfig,
    l2_penalty,
    loss_fn,
    mae,
    mape,
    measure_latency,
    run_seeds,
    train_model,
)


def test_metric_examples():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0 and mape([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae([2.0], [1.0]) == 1.0 and mape([2.0], [1.0]) == 100.0
    assert mae([1.0, 3.0], [2.0, 2.0]) == 1.0 and mape([1.0, 3.0], [2.0, 2.0]) == 50.0
    with pytest.raises(ValueError):
        mape([1.0], [0.0])
    with pytest.raises(ValueError):
        mae([1.0, 2.0], [1.0])


def test_train_config_validation():
    assert TrainConfig(precision="f64").dtype == np.float64
    for bad in ({"epochs": 0}, {"learning_rate": 0}, {"l2_coefficient": -1}, {"precision": "f16"}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_adam_minimises_quadratic():
    w = Tensor(np.array([3.0, -2.0]), requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(300):
        opt.zero_grad()
        square_sum(w).backward()
        opt.step()
    assert np.all(np.abs(w.data) < 1e-2)


def test_adam_first_step_is_lr_times_sign():
    w = Tensor(np.array([1.0, -1.0]), requires_grad=True)
    opt = Adam([w], lr=0.01)
    square_sum(w).backward()
    opt.step()
    np.testing.assert_allclose(w.data, [0.99, -0.99], rtol=1e-6)


def test_l2_penalty_counts_weights_only():
    m = build_model(ModelSpec("FC_Gavg", "Z4", 4, 2, 0, "area"), dtype=np.float64)
    expected = sum(float(np.sum(p.data ** 2)) for k, p in m.params().items() if k.endswith("W"))
    assert l2_penalty(m).item() == pytest.approx(expected)
    x = np.zeros((2, 4, 2))
    base = loss_fn(m, x, np.zeros(2), 0.0).item()
    assert loss_fn(m, x, np.zeros(2), 1e-5).item() == pytest.approx(base + 1e-5 * expected)


def _constant_dataset(value=0.7, n=32):
    rng = np.random.default_rng(0)
    splits = [Split(rng.uniform(size=(n, 4, 2)), np.full(n, value)) for _ in range(3)]
    return Dataset("area", 0, *splits)


def test_one_epoch_reduces_train_mae_on_constant_target():
    m = build_model(ModelSpec("FC_Ginv", "Z4", 4, 2, 2, "area"))
    _, metrics = train_model(m, _constant_dataset(), TrainConfig(epochs=1, seeds=(0,)))
    assert metrics.curves["train_mae"][1] < metrics.curves["train_mae"][0]


def test_best_checkpoint_is_returned():
    ds = gen_poly_dataset("PZ5", (16, 32, 32), seed=1)
    m = build_model(ModelSpec("FC_Ginv", "Z5", 5, 1, 4))
    m, metrics = train_model(m, ds, TrainConfig(epochs=15, seeds=(0,)))
    curve = metrics.curves["val_mae"]
    assert len(curve) == 16
    assert metrics.final["val_mae"] == pytest.approx(min(curve), rel=1e-9)
    assert metrics.final["val_mae"] <= curve[-1]
    assert curve[metrics.best_epoch] == min(curve)
    assert metrics.mult_count == 5 * 4 * 4 and metrics.activation_size == 25 * 4


def test_training_is_deterministic_in_f64():
    ds = gen_poly_dataset("PZ5", (16, 8, 8), seed=2)
    cfg = TrainConfig(epochs=3, seeds=(1,), precision="f64")
    runs = []
    for _ in range(2):
        m = build_model(ModelSpec("Conv1D_Ginv", "Z5", 5, 1, 3), seed=1, dtype=np.float64)
        runs.append(train_model(m, ds, cfg, seed=1)[1])
    assert runs[0].curves == runs[1].curves and runs[0].final == runs[1].final


def test_latency_and_aggregation():
    m = build_model(ModelSpec("FC_Ginv", "Z4", 4, 2, 2, "area"))
    mean_ms, std_ms = measure_latency(m, np.zeros((20, 4, 2)), repeats=5)
    assert mean_ms > 0 and std_ms >= 0
    runs = [RunMetrics(seed=s, final={"test_mae": v}, latency_ms=(1.0, 0.0)) for s, v in enumerate([1.0, 3.0])]
    agg = AggregateMetrics.from_runs(runs)
    assert agg.mean["test_mae"] == 2.0 and agg.std["test_mae"] == 1.0
    assert agg.to_dict()["seeds"] == [0, 1]


def _square(seed):
    return RunMetrics(seed=seed, final={"x": float(seed ** 2)})


def test_run_seeds_serial_and_parallel():
    serial = run_seeds(_square, [0, 1, 2], workers=1)
    parallel = run_seeds(_square, [0, 1, 2], workers=2)
    assert [r.final for r in serial] == [r.final for r in parallel]


def test_curves_csv():
    r = RunMetrics(curves={"train_mae": [1.0, 0.5], "val_mae": [2.0, 1.0],
                           "train_mape": [10.0, 5.0], "val_mape": [20.0, 10.0]})
    lines = r.curves_csv().splitlines()
    assert lines[0] == "epoch,train_mae,val_mae,train_mape,val_mape"
    assert lines[2] == "1,0.5,1.0,5.0,10.0"
