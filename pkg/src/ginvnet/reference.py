"""Reference values that the reproduction suites are compared against.

Every entry carries a ``source`` label describing the experiment. MAE values
are in absolute units, not the x1e-2 / x1e-3 scaled form.
"""

# (mean, std)
TABLE1_POLY_MAE = {
    "source": "reference: Z5 polynomial regression, MAE",
    "FC_Gavg": {"train": (0.1515, 0.0549), "val": (0.1648, 0.0073), "test": (0.1689, 0.0076), "weights": 24.0e3},
    "FC_Ginv": {"train": (0.0265, 0.0091), "val": (0.0732, 0.0055), "test": (0.0746, 0.0056), "weights": 24.0e3},
    "Conv1D_Gavg": {"train": (0.0898, 0.0639), "val": (0.1143, 0.0429), "test": (0.1178, 0.0479), "weights": 24.0e3},
    "Conv1D_Ginv": {"train": (0.0087, 0.0012), "val": (0.0257, 0.0037), "test": (0.026, 0.004), "weights": 24.0e3},
    "Maron": {"train": (0.0241, 0.0082), "val": (0.0574, 0.0119), "test": (0.0593, 0.0118), "weights": 24.2e3},
}

TABLE1_LATENCY_MS = {
    "source": "reference: latency of 300 inferences, batch 16, GPU",
    "Conv1D_Ginv": (2.3, 0.4),
    "Maron": (21.4, 1.5),
}

TABLE2_AREA_MAE = {
    "source": "reference: quadrangle area, MAE",
    "FC_Gavg": {"train": (0.0070, 0.0006), "val": (0.0096, 0.0010), "test": (0.0094, 0.0009), "weights": 1765},
    "FC_Ginv": {"train": (0.0074, 0.0004), "val": (0.0080, 0.0003), "test": (0.0083, 0.0005), "weights": 1785},
    "Conv1D_Gavg": {"train": (0.0169, 0.0077), "val": (0.0168, 0.0053), "test": (0.0185, 0.0068), "weights": 1667},
    "Conv1D_Ginv": {"train": (0.0060, 0.0003), "val": (0.0073, 0.0003), "test": (0.0075, 0.0005), "weights": 1673},
    "Maron": {"train": (0.0139, 0.0009), "val": (0.0223, 0.0012), "test": (0.0234, 0.0013), "weights": 1802},
}

TABLE3_GROUP_SIZE = {
    "source": "reference: FC G-inv group size sweep, MAPE %, time ms",
    "PZ5": {"order": 5, "train_mape": (3.2, 0.8), "test_mape": (12.8, 4.6), "time_ms": (2.3, 0.4)},
    "PD8": {"order": 8, "train_mape": (3.9, 1.7), "test_mape": (10.4, 2.8), "time_ms": (2.2, 0.2)},
    "PA4": {"order": 12, "train_mape": (2.5, 0.7), "test_mape": (4.7, 1.1), "time_ms": (2.3, 0.3)},
    "PS4": {"order": 24, "train_mape": (5.6, 2.7), "test_mape": (14.9, 5.9), "time_ms": (2.4, 0.4)},
}

TABLE4_NMID = {
    "source": "reference: quadrangle area n_mid sweep, test MAE, time ms",
    "Conv1D_Ginv": {
        1: ((0.0076, 0.0003), (2.9, 0.1)),
        2: ((0.0075, 0.0005), (2.9, 0.1)),
        8: ((0.0075, 0.0004), (2.9, 0.2)),
        32: ((0.0073, 0.0003), (3.1, 0.7)),
        128: ((0.0074, 0.0003), (2.9, 0.1)),
    },
    "FC_Ginv": {
        1: ((0.0325, 0.0007), (3.0, 0.3)),
        2: ((0.0101, 0.0037), (3.0, 0.2)),
        8: ((0.0085, 0.0003), (2.9, 0.2)),
        32: ((0.0081, 0.0003), (3.0, 0.1)),
        128: ((0.0082, 0.0004), (3.4, 0.5)),
    },
}

# experiment dimensions (n, n_in, n_mid) of the invariant models
DIMS = {
    "poly": (5, 1, 64),
    "poly_conv": (5, 1, 118),
    "area": (4, 2, 2),
    "group_size": (5, 1, 2),
    "robust": (5, 1, 8),
}

EPOCHS = {"poly": 2500, "area": 300}
LEARNING_RATE = 1e-3
L2_COEFFICIENT = 1e-5
