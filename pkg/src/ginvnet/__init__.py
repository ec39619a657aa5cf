"""Permutation-group invariant neural networks on a small numpy autodiff core."""
from .data import Dataset, gen_area_dataset, gen_poly_dataset, load_dataset, mc_area, save_dataset, shoelace_area
from .experiments import ExperimentConfig, parse_config, run_experiment, serialize_config
from .invariants import (
    BENCHMARK_NAMES,
    InvariantPolynomial,
    benchmark_group,
    benchmark_polynomial,
    generating_candidates,
    reynolds_symmetrize,
)
from .layers import SigmaPi, reynolds_average, sigma_pi, sigma_pi_naive
from .models import KINDS, Model, ModelSpec, build_model, param_count
from .permgroup import (
    GroupError,
    Permutation,
    PermutationGroup,
    act_on_rows,
    closure,
    compose,
    inverse,
    named_group,
    parse_group,
)
from .tensor import Tensor, count_multiplications, grad_check
from .train import AggregateMetrics, TrainConfig, mae, mape, train_model

__version__ = "0.1.0"

__all__ = [
    "AggregateMetrics", "BENCHMARK_NAMES", "Dataset", "ExperimentConfig", "GroupError",
    "InvariantPolynomial", "KINDS", "Model", "ModelSpec", "Permutation", "PermutationGroup",
    "SigmaPi", "Tensor", "TrainConfig", "act_on_rows", "benchmark_group", "benchmark_polynomial",
    "build_model", "closure", "compose", "count_multiplications", "gen_area_dataset",
    "gen_poly_dataset", "generating_candidates", "grad_check", "inverse", "load_dataset", "mae",
    "mape", "mc_area", "named_group", "param_count", "parse_config", "parse_group",
    "reynolds_average", "reynolds_symmetrize", "run_experiment", "save_dataset",
    "serialize_config", "shoelace_area", "sigma_pi", "sigma_pi_naive", "train_model",
]
