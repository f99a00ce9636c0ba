"""Stability-aware probabilistic forecasting with spline quantile functions."""

from .baselines import baseline_forecaster
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import Dataset, Series, SynthSpec, gen_synthetic, load_dataset, save_dataset
from .evaluation import (
    EvalReport,
    ForecastTrace,
    evaluate,
    evaluate_forecaster,
    model_forecaster,
    rolling_forecasts,
)
from .forecaster import ModelConfig, forward_numpy, grid_quantiles, make_store
from .metrics import (
    crps_on_grid,
    level_weights,
    naive_mae_scale,
    naive_power_scale,
    quantile_grid,
    quantile_score,
    wasserstein_on_grid,
)
from .splines import SplineQF, default_knots, knots_for_grid, spline_basis
from .stabilize import stabilize_stack, stabilize_traces
from .training import TrainConfig, TrainResult, preset, train

__all__ = [
    "Checkpoint",
    "Dataset",
    "EvalReport",
    "ForecastTrace",
    "ModelConfig",
    "Series",
    "SplineQF",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "baseline_forecaster",
    "crps_on_grid",
    "default_knots",
    "evaluate",
    "evaluate_forecaster",
    "forward_numpy",
    "gen_synthetic",
    "grid_quantiles",
    "knots_for_grid",
    "level_weights",
    "load_checkpoint",
    "load_dataset",
    "make_store",
    "model_forecaster",
    "naive_mae_scale",
    "naive_power_scale",
    "preset",
    "quantile_grid",
    "quantile_score",
    "rolling_forecasts",
    "save_checkpoint",
    "save_dataset",
    "spline_basis",
    "stabilize_stack",
    "stabilize_traces",
    "train",
    "wasserstein_on_grid",
]

__version__ = "0.1.0"
