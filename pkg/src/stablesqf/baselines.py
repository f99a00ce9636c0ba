"""Windowed-mean and seasonal-naive benchmark forecasters.

Each method comes in a Gaussian variant (closed-form interval widths around
the point forecast) and a bootstrap variant (empirical quantiles of resampled
sample paths).  Interval formulas are the canonical benchmark ones: the mean
method uses variance sigma^2 (1 + 1/T); the seasonal naive inflates by one
in-sample error variance per started seasonal cycle.
"""

from __future__ import annotations

import math

import numpy as np

METHODS = ("meang", "meanb", "snaiveg", "snaiveb")

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# rational approximation coefficients (Acklam) for the inverse normal CDF
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: np.ndarray) -> np.ndarray:
    x = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if lo.any():
        q = np.sqrt(-2.0 * np.log(p[lo]))
        x[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if hi.any():
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        x[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    return x


def std_normal_quantile(alpha):
    """Inverse standard normal CDF: rational approximation plus one Halley step."""
    arr = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    x = _acklam(arr)
    cdf = np.array([0.5 * math.erfc(-v / _SQRT2) for v in x])
    err = cdf - arr
    u = err * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x if np.ndim(alpha) else float(x[0])


def mean_forecast(window: np.ndarray, h: int, alphas: np.ndarray, variant: str = "gaussian",
                  rng=None, n_paths: int = 5000) -> np.ndarray:
    """Forecast from the window mean; horizon-independent by construction."""
    window = np.asarray(window, dtype=float)
    t_len = window.size
    if t_len < 2:
        raise ValueError("mean method needs a window of at least 2 values")
    mu = window.mean()
    if variant == "gaussian":
        sd = window.std(ddof=1)
        row = mu + sd * math.sqrt(1.0 + 1.0 / t_len) * std_normal_quantile(alphas)
        return np.tile(row, (h, 1))
    if variant == "bootstrap":
        rng = rng or np.random.default_rng()
        resid = window - mu
        idx = rng.integers(0, t_len, size=(n_paths, h))
        paths = mu + resid[idx]
        return np.stack([np.quantile(paths[:, i], alphas) for i in range(h)])
    raise ValueError(f"unknown variant {variant!r}")


def seasonal_anchors(history: np.ndarray, m: int, h: int) -> np.ndarray:
    """Point forecasts: the last observed value from each target's season."""
    history = np.asarray(history, dtype=float)
    n = history.size
    if n < m + 1:
        raise ValueError(f"seasonal naive needs at least {m + 1} observations")
    idx = [n - 1 + i - m * math.ceil(i / m) for i in range(1, h + 1)]
    return history[idx]


def snaive_errors(history: np.ndarray, m: int) -> np.ndarray:
    history = np.asarray(history, dtype=float)
    return history[m:] - history[:-m]


def snaive_forecast(history: np.ndarray, m: int, h: int, alphas: np.ndarray,
                    variant: str = "gaussian", sigma: float | None = None,
                    errors: np.ndarray | None = None, n_paths: int = 5000, seed: int = 0,
                    base_time: int | None = None) -> np.ndarray:
    """Seasonal-naive quantile forecast.

    sigma/errors may be passed to freeze the uncertainty estimate on a fixed
    history (the rolling harness does this so overlapping targets get
    identical forecasts from every origin).  Bootstrap draws are keyed by the
    absolute target time, which makes them origin-independent too.
    """
    history = np.asarray(history, dtype=float)
    point = seasonal_anchors(history, m, h)
    if errors is None:
        errors = snaive_errors(history, m)
    if variant == "gaussian":
        if sigma is None:
            sigma = errors.std(ddof=1) if errors.size > 1 else 0.0
        band = np.array([(i - 1) // m for i in range(1, h + 1)], dtype=float)
        z = std_normal_quantile(alphas)
        return point[:, None] + sigma * np.sqrt(band + 1.0)[:, None] * z[None, :]
    if variant == "bootstrap":
        if errors.size == 0:
            return np.tile(point[:, None], (1, len(alphas)))
        t0 = history.size - 1 if base_time is None else base_time
        draw_cache: dict[int, np.ndarray] = {}
        out = np.empty((h, len(alphas)))
        for i in range(1, h + 1):
            paths = np.full(n_paths, point[i - 1])
            for j in range(math.ceil(i / m)):
                w = t0 + i - j * m
                if w not in draw_cache:
                    r = np.random.default_rng((seed, w))
                    draw_cache[w] = errors[r.integers(0, errors.size, size=n_paths)]
                paths = paths + draw_cache[w]
            out[i - 1] = np.quantile(paths, alphas)
        return out
    raise ValueError(f"unknown variant {variant!r}")


def baseline_forecaster(method: str, h: int, alphas: np.ndarray, m: int = 1,
                        window_len: int = 24, n_paths: int = 5000, seed: int = 0):
    """make_fn(series, index) factory for the rolling evaluation harness.

    Seasonal methods freeze their in-sample error pool at the first call,
    which the harness issues from the earliest (pre-test) origin.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")

    def make_fn(series, index: int):
        frozen: dict = {}

        def fn(history: np.ndarray) -> np.ndarray:
            if method == "meang":
                return mean_forecast(history[-window_len:], h, alphas, "gaussian")
            if method == "meanb":
                rng = np.random.default_rng((seed, index, len(history)))
                return mean_forecast(history[-window_len:], h, alphas, "bootstrap", rng, n_paths)
            if not frozen:
                frozen["errors"] = snaive_errors(history, m)
                e = frozen["errors"]
                frozen["sigma"] = e.std(ddof=1) if e.size > 1 else 0.0
            if method == "snaiveg":
                return snaive_forecast(history, m, h, alphas, "gaussian",
                                       sigma=frozen["sigma"], errors=frozen["errors"])
            return snaive_forecast(history, m, h, alphas, "bootstrap",
                                   errors=frozen["errors"], n_paths=n_paths,
                                   seed=hash((seed, index)) % (2**32), base_time=len(history) - 1)

        return fn

    return make_fn
