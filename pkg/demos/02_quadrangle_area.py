"""Train the convolutional invariant network on quadrangle areas for a handful of epochs."""
import numpy as np

from ginvnet import ModelSpec, TrainConfig, build_model, gen_area_dataset, train_model

# small dataset: 64 training quadrangles, areas from 20k Monte-Carlo samples each
ds = gen_area_dataset((64, 64, 128), seed=1, mc_samples=20_000)
print("first quadrangle:\n", ds.train.inputs[0], "\narea (MC, exact):", ds.train.targets[0], ds.train.exact[0])

# rows are vertices, so rotating the vertex list is the symmetry to respect
model = build_model(ModelSpec("Conv1D_Ginv", "Z4", n=4, n_in=2, n_mid=2, task="area"), seed=0)
print("\n".join(model.layer_plan()))
print("weights:", model.param_count())

model, metrics = train_model(model, ds, TrainConfig(epochs=40, seeds=(0,)))
print("val MAE by epoch (every 10):", np.round(metrics.curves["val_mae"][::10], 4))
print("best epoch", metrics.best_epoch, "test MAE", round(metrics.final["test_mae"], 4))

# shifting the starting vertex leaves the prediction unchanged
q = ds.test.inputs[:1]
print(model.predict(q), model.predict(np.roll(q, 1, axis=1)))
