"""Rolling-origin forecast generation and scaled metric aggregation.

Origins advance one period at a time; each forecast conditions only on data
up to its origin.  Quality (CRPS) is computed per (origin, horizon) item and
stability (W1) per adjacent-origin pair and overlapping target period; every
item is scaled by a naive-error statistic of the series' full history, then
everything is pooled into one flat mean per metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, destandardize, standardize
from .forecaster import ModelConfig, grid_quantiles, make_window
from .metrics import (
    clip_nonnegative,
    crps_on_grid,
    naive_mae_scale,
    naive_power_scale,
    wasserstein_on_grid,
)


@dataclass
class ForecastTrace:
    sid: str
    origin: int
    q: np.ndarray  # (h, M) quantile values, level-sorted rows
    alphas: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 2 or self.q.shape[1] != len(self.alphas):
            raise ValueError("quantile matrix must be (horizon, levels)")
        if np.any(np.diff(self.q, axis=1) < -1e-9):
            raise ValueError("quantile rows must be nondecreasing")


def rolling_forecasts(forecast_fn, values: np.ndarray, n_origins: int, h: int, alphas: np.ndarray,
                      sid: str = "", clip: bool = True) -> list[ForecastTrace]:
    """One trace per origin; the test region is the last n_origins+h-1 points."""
    values = np.asarray(values, dtype=float)
    n = values.size
    first = n - h - n_origins
    if n_origins < 1 or first < 1:
        raise ValueError(
            f"series of length {n} cannot host {n_origins} origins with horizon {h}"
        )
    traces = []
    for t in range(first, first + n_origins):
        q = np.asarray(forecast_fn(values[: t + 1]), dtype=float)
        if q.shape != (h, len(alphas)):
            raise ValueError(f"forecaster returned shape {q.shape}, expected {(h, len(alphas))}")
        if clip:
            q = clip_nonnegative(q)
        traces.append(ForecastTrace(sid, t, q, alphas))
    return traces


def trace_stack(traces: list[ForecastTrace]) -> np.ndarray:
    """Stack consecutive-origin traces into a (J, h, M) array."""
    origins = np.array([tr.origin for tr in traces])
    if len(traces) > 1 and np.any(np.diff(origins) != 1):
        raise ValueError("traces must come from consecutive origins")
    return np.stack([tr.q for tr in traces])


WEIGHTS = ("uniform", "center", "tail")


@dataclass
class EvalReport:
    scrps: float
    scrps_c: float
    scrps_t: float
    sw1: float
    sw1_c: float
    sw1_t: float
    n_quality_items: int
    n_stability_items: int
    scrps_by_horizon: np.ndarray
    sw1_by_horizon: np.ndarray
    scrps_by_origin: np.ndarray

    def row(self):
        return [self.scrps, self.scrps_c, self.scrps_t, self.sw1, self.sw1_c, self.sw1_t]


def evaluate(per_series: list[tuple[list[ForecastTrace], np.ndarray]], alphas: np.ndarray) -> EvalReport:
    """Aggregate scaled CRPS and adjacent-origin W1 over many series.

    per_series pairs a trace list with that series' full history (training
    plus test observations); the history supplies both the actuals and the
    scaling constants.  With a single origin the stability fields are NaN.
    """
    crps_items = {w: [] for w in WEIGHTS}
    w1_items = {w: [] for w in WEIGHTS}
    by_h: dict[int, list] = {}
    by_o: dict[int, list] = {}
    by_h_w1: dict[int, list] = {}
    for traces, values in per_series:
        values = np.asarray(values, dtype=float)
        q = trace_stack(traces)
        j_n, h, _ = q.shape
        if traces[-1].origin + h >= values.size:
            raise ValueError("history does not cover all forecast targets")
        c_scale = naive_mae_scale(values)
        w_scale = naive_power_scale(values, 1.0)
        for j, tr in enumerate(traces):
            y = values[tr.origin + 1 : tr.origin + 1 + h]
            for w in WEIGHTS:
                vals = crps_on_grid(q[j], y, alphas, w) / c_scale
                crps_items[w].extend(vals)
            u = crps_on_grid(q[j], y, alphas, "uniform") / c_scale
            for i in range(h):
                by_h.setdefault(i, []).append(u[i])
            by_o.setdefault(j, []).extend(u)
            if j > 0:
                for i in range(h - 1):
                    for w in WEIGHTS:
                        w1_items[w].append(
                            wasserstein_on_grid(q[j, i], q[j - 1, i + 1], alphas, 1.0, w) / w_scale
                        )
                    by_h_w1.setdefault(i, []).append(w1_items["uniform"][-1])
    n_q = len(crps_items["uniform"])
    n_s = len(w1_items["uniform"])
    horizon = max(by_h) + 1 if by_h else 0
    origins = max(by_o) + 1 if by_o else 0
    mean = lambda xs: float(np.mean(xs)) if xs else float("nan")
    return EvalReport(
        scrps=mean(crps_items["uniform"]),
        scrps_c=mean(crps_items["center"]),
        scrps_t=mean(crps_items["tail"]),
        sw1=mean(w1_items["uniform"]),
        sw1_c=mean(w1_items["center"]),
        sw1_t=mean(w1_items["tail"]),
        n_quality_items=n_q,
        n_stability_items=n_s,
        scrps_by_horizon=np.array([mean(by_h.get(i, [])) for i in range(horizon)]),
        sw1_by_horizon=np.array([mean(by_h_w1.get(i, [])) for i in range(max(horizon - 1, 0))]),
        scrps_by_origin=np.array([mean(by_o.get(j, [])) for j in range(origins)]),
    )


def model_forecaster(store, cfg: ModelConfig, loc: float, scale: float, alphas: np.ndarray):
    """Serving closure for one series: raw history in, raw quantiles out."""

    def fn(history: np.ndarray) -> np.ndarray:
        z = standardize(history, loc, scale)
        w = make_window(z, cfg.lookback)
        q = grid_quantiles(store, cfg, w[None, :], alphas)[0]
        return destandardize(q, loc, scale)

    return fn


def collect_traces(make_fn, dataset: Dataset, n_origins: int, h: int, alphas: np.ndarray,
                   clip: bool = True) -> list[tuple[list[ForecastTrace], np.ndarray]]:
    """Run the rolling harness for every series; keep traces with histories.

    make_fn(series, index) returns that series' forecast closure.
    """
    items = []
    for idx, s in enumerate(dataset):
        fn = make_fn(s, idx)
        traces = rolling_forecasts(fn, s.values, n_origins, h, alphas, sid=s.sid, clip=clip)
        items.append((traces, s.values))
    return items


def evaluate_forecaster(make_fn, dataset: Dataset, n_origins: int, h: int, alphas: np.ndarray,
                        clip: bool = True) -> EvalReport:
    """collect_traces followed by evaluate, for when traces are not needed."""
    return evaluate(collect_traces(make_fn, dataset, n_origins, h, alphas, clip), alphas)
