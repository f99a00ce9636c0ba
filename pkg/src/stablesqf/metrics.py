"""Grid-discretized scoring rules for quantile-function forecasts.

All metrics work on a fixed grid of quantile levels.  CRPS and the Wasserstein
distance both reduce to weighted level averages of pointwise terms, which is
what makes them cheap to evaluate and differentiate through.
"""

from __future__ import annotations

import numpy as np

WEIGHT_NAMES = ("uniform", "center", "tail")


def quantile_grid(m: int = 100) -> np.ndarray:
    """Centered level grid alpha_k = (k + 0.5) / m for k = 0..m-1."""
    if m < 2:
        raise ValueError("need at least two quantile levels")
    return (np.arange(m) + 0.5) / m


def level_weights(alphas: np.ndarray, weight: str = "uniform") -> np.ndarray:
    """Level weighting profiles.

    uniform: 1 everywhere.  center: alpha * (1 - alpha), emphasizing the body.
    tail: (2 * alpha - 1)^2, emphasizing both tails.
    """
    a = np.asarray(alphas, dtype=float)
    if weight == "uniform":
        return np.ones_like(a)
    if weight == "center":
        return a * (1.0 - a)
    if weight == "tail":
        return (2.0 * a - 1.0) ** 2
    raise ValueError(f"unknown weight {weight!r}, expected one of {WEIGHT_NAMES}")


def quantile_score(q: np.ndarray, y: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Pinball loss scaled by 2: QS_alpha(q, y) = 2 (1{y <= q} - alpha) (q - y).

    Broadcasts y against q's leading axes; the trailing axis of q indexes
    levels.  Nonnegative, zero only when q = y.
    """
    q = np.asarray(q, dtype=float)
    y = np.asarray(y, dtype=float)[..., None]
    a = np.asarray(alphas, dtype=float)
    return 2.0 * ((y <= q).astype(float) - a) * (q - y)


def crps_on_grid(q: np.ndarray, y: np.ndarray, alphas: np.ndarray, weight: str = "uniform") -> np.ndarray:
    """Weighted level average of quantile scores; approximates (weighted) CRPS."""
    v = level_weights(alphas, weight)
    qs = quantile_score(q, y, alphas)
    return (qs * v).mean(axis=-1)


def wasserstein_on_grid(
    qf: np.ndarray, qg: np.ndarray, alphas: np.ndarray, p: float = 1.0, weight: str = "uniform"
) -> np.ndarray:
    """Weighted p-Wasserstein distance between two quantile functions on a grid.

    ((1/m) sum_k v(alpha_k) |qf_k - qg_k|^p)^(1/p); levels run along the last
    axis.
    """
    if p < 1:
        raise ValueError("order p must be at least 1")
    v = level_weights(alphas, weight)
    diff = np.abs(np.asarray(qf, dtype=float) - np.asarray(qg, dtype=float)) ** p
    return (diff * v).mean(axis=-1) ** (1.0 / p)


SCALE_FLOOR = 1e-8


def naive_mae_scale(history: np.ndarray, season: int = 1) -> float:
    """Mean absolute one-step seasonal-naive error over the history.

    (1/(T-s)) sum_t |y_t - y_{t-s}| with a small floor so scaled scores stay
    finite on constant series.
    """
    y = np.asarray(history, dtype=float)
    if y.size <= season:
        raise ValueError("history shorter than the season length")
    return max(float(np.mean(np.abs(y[season:] - y[:-season]))), SCALE_FLOOR)


def naive_power_scale(history: np.ndarray, p: float = 1.0, season: int = 1) -> float:
    """Power-mean seasonal-naive error, matching the Wasserstein order p."""
    y = np.asarray(history, dtype=float)
    if y.size <= season:
        raise ValueError("history shorter than the season length")
    m = float(np.mean(np.abs(y[season:] - y[:-season]) ** p) ** (1.0 / p))
    return max(m, SCALE_FLOOR)


def clip_nonnegative(q: np.ndarray) -> np.ndarray:
    """Clamp quantile values at zero; keeps monotonicity in the level axis."""
    return np.maximum(np.asarray(q, dtype=float), 0.0)
