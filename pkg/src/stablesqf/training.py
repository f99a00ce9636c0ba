"""Training: windows, augmentation, composite loss, and the fitting loop.

The objective blends forecast quality and forecast stability.  Quality is the
scaled CRPS of the forecasts from two adjacent origins against their targets.
Stability penalizes the Wasserstein distance between the two origins'
forecasts for the same target period: horizon i from the newer origin is
paired with horizon i+1 from the older one.  A mixing weight lam in [0, 1]
moves between the two terms; gradients flow through both forward passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import netcore as nc
from .data import Dataset, series_stats, standardize
from .forecaster import ModelConfig, forward_tape, layout
from .metrics import SCALE_FLOOR, level_weights, quantile_grid
from .splines import spline_basis


@dataclass
class TrainConfig:
    batch_size: int = 64
    iterations: int = 600
    lr: float = 1e-3
    ema_decay: float = 0.99
    lam: float = 0.0
    p: float = 1.0
    weight: str = "uniform"
    origin_range: int = 0
    grid_m: int = 100
    augment: bool = True
    seed: int = 0

    def validate(self, horizon: int):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.lam > 0 and horizon < 2:
            raise ValueError("stability term needs horizon >= 2")
        if self.batch_size < 1 or self.iterations < 0:
            raise ValueError("batch_size must be positive and iterations nonnegative")
        if self.p < 1:
            raise ValueError("order p must be at least 1")
        level_weights(np.array([0.5]), self.weight)


@dataclass
class TrainingSample:
    series_index: int
    origin: int
    lookback: np.ndarray
    lagged_lookback: np.ndarray
    targets: np.ndarray
    lagged_targets: np.ndarray


def origin_bounds(n: int, lookback: int, horizon: int, origin_range: int):
    """Inclusive origin index range [lo, hi] for a series of length n.

    The origin is the index of the last observed point.  hi leaves room for h
    targets; lo prefers a full lookback but falls back to front padding on
    short series, and never drops below 1 so the lagged origin exists.
    """
    hi = n - 1 - horizon
    if hi < 1:
        raise ValueError(f"series of length {n} too short for horizon {horizon}")
    lo = max(1, min(lookback, hi))
    if origin_range > 0:
        lo = max(lo, hi - origin_range + 1)
    return lo, hi


def window_ending_at(y: np.ndarray, t: int, length: int) -> np.ndarray:
    """The `length` values ending at index t, zero-padded at the front."""
    start = t - length + 1
    if start >= 0:
        return y[start : t + 1].copy()
    return np.concatenate([np.zeros(-start), y[: t + 1]])


def sample_batch(train_values: list[np.ndarray], cfg: ModelConfig, tcfg: TrainConfig, rng) -> list[TrainingSample]:
    """Draw batch_size (series, origin) pairs and cut their four windows."""
    t_len, h = cfg.lookback, cfg.horizon
    batch = []
    for _ in range(tcfg.batch_size):
        si = int(rng.integers(len(train_values)))
        y = train_values[si]
        lo, hi = origin_bounds(y.size, t_len, h, tcfg.origin_range)
        t = int(rng.integers(lo, hi + 1))
        batch.append(
            TrainingSample(
                series_index=si,
                origin=t,
                lookback=window_ending_at(y, t, t_len),
                lagged_lookback=window_ending_at(y, t - 1, t_len),
                targets=y[t + 1 : t + 1 + h].copy(),
                lagged_targets=y[t : t + h].copy(),
            )
        )
    return batch


def augment_batch(batch: list[TrainingSample], rng):
    """Shift every value of a sample by one delta, then scale by one factor.

    The same affine map hits all four windows of the sample, so relative
    structure (and the lagged-consistency invariant) is preserved.
    """
    for smp in batch:
        delta = rng.uniform(-1.0, 1.0)
        factor = rng.uniform(0.5, 1.5)
        for name in ("lookback", "lagged_lookback", "targets", "lagged_targets"):
            setattr(smp, name, (getattr(smp, name) + delta) * factor)
    return batch


def _window_scales(x: np.ndarray, p: float) -> np.ndarray:
    """Per-row naive error scale of lookback windows, floored."""
    d = np.abs(np.diff(x, axis=1)) ** p
    return np.maximum(d.mean(axis=1) ** (1.0 / p), SCALE_FLOOR)


def composite_loss(store: nc.ParamStore, cfg: ModelConfig, batch: list[TrainingSample], tcfg: TrainConfig):
    """Build the loss graph for one batch.

    Returns (loss node, quality value, instability value).  The instability
    value is reported even when lam = 0, in which case it is computed outside
    the graph and contributes nothing to gradients.
    """
    b = len(batch)
    h = cfg.horizon
    alphas = quantile_grid(tcfg.grid_m)
    basis = spline_basis(cfg.knots, alphas)
    ones = np.ones_like(alphas)
    v_w = level_weights(alphas, tcfg.weight)

    x = np.vstack(
        [
            np.stack([smp.lookback for smp in batch]),
            np.stack([smp.lagged_lookback for smp in batch]),
        ]
    )
    targets = np.stack([smp.targets for smp in batch])
    lagged_targets = np.stack([smp.lagged_targets for smp in batch])

    inv_crps_scale = 1.0 / _window_scales(x, 1.0)
    inv_w_scale = 1.0 / _window_scales(x[:b], tcfg.p)

    gammas, betas = forward_tape(store, cfg, x)
    horizon_q: list[nc.Var] = []
    quality = None
    for i in range(h):
        q = nc.spline_apply(gammas[i], betas[i], basis)
        horizon_q.append(q)
        y_col = np.concatenate([targets[:, i], lagged_targets[:, i]])
        row = nc.scale(nc.wmean_last(nc.pinball(q, y_col, alphas), ones), inv_crps_scale)
        term = nc.vsum(row)
        quality = term if quality is None else nc.add(quality, term)
    quality = nc.scale(quality, 1.0 / (2 * h * b))

    if tcfg.lam > 0:
        instab = None
        for i in range(h - 1):
            d = nc.sub(nc.rows(horizon_q[i], 0, b), nc.rows(horizon_q[i + 1], b, 2 * b))
            row = nc.wmean_last(nc.abspow(d, tcfg.p), v_w)
            if tcfg.p != 1.0:
                row = nc.powx(row, 1.0 / tcfg.p)
            term = nc.vsum(nc.scale(row, inv_w_scale))
            instab = term if instab is None else nc.add(instab, term)
        instab = nc.scale(instab, 1.0 / ((h - 1) * b))
        loss = nc.add(nc.scale(quality, 1.0 - tcfg.lam), nc.scale(instab, tcfg.lam))
        s_val = float(instab.val)
    else:
        loss = quality
        s_val = _instability_value([q.val for q in horizon_q], b, v_w, tcfg.p, inv_w_scale) if h > 1 else 0.0
    return loss, float(quality.val), s_val


def _instability_value(qvals: list[np.ndarray], b: int, v_w: np.ndarray, p: float, inv_scale: np.ndarray) -> float:
    h = len(qvals)
    total = 0.0
    for i in range(h - 1):
        d = np.abs(qvals[i][:b] - qvals[i + 1][b:]) ** p
        row = (d * v_w).mean(axis=1) ** (1.0 / p)
        total += float((row * inv_scale).sum())
    return total / ((h - 1) * b)


@dataclass
class TrainResult:
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    store: nc.ParamStore
    ema: np.ndarray
    trace: list
    stats: dict = field(default_factory=dict)

    def serving_store(self) -> nc.ParamStore:
        st = nc.ParamStore(layout(self.model_cfg))
        st.theta[:] = self.ema
        return st


def train(dataset: Dataset, cfg: ModelConfig, tcfg: TrainConfig, test_len: int = 0) -> TrainResult:
    """Fit on the pre-test part of every series; serve the EMA weights."""
    tcfg.validate(cfg.horizon)
    stats = {}
    train_values = []
    for s in dataset:
        loc, sc = series_stats(s.values, exclude_last=test_len)
        stats[s.sid] = (loc, sc)
        cut = s.values[:-test_len] if test_len > 0 else s.values
        if cut.size < cfg.horizon + 2:
            raise ValueError(f"series {s.sid!r} too short to train on")
        train_values.append(standardize(cut, loc, sc))

    rng = np.random.default_rng(tcfg.seed)
    store = nc.ParamStore(layout(cfg))
    nc.init_uniform(store, rng)
    opt = nc.Adam(store.size, lr=tcfg.lr)
    ema = nc.EmaTracker(store.theta, decay=tcfg.ema_decay)
    trace = []
    for it in range(tcfg.iterations):
        batch = sample_batch(train_values, cfg, tcfg, rng)
        if tcfg.augment:
            augment_batch(batch, rng)
        loss, q_val, s_val = composite_loss(store, cfg, batch, tcfg)
        total = float(loss.val)
        if not np.isfinite(total):
            raise RuntimeError(f"training diverged at iteration {it}: loss {total}")
        store.zero_grad()
        nc.backward(loss)
        opt.step(store.theta, store.grad)
        ema.update(store.theta)
        trace.append((it, q_val, s_val, total))
    return TrainResult(cfg, tcfg, store, ema.shadow.copy(), trace, stats)


def preset(name: str, horizon: int, period: int = 1):
    """Documented hyperparameter bundles.

    'desk' is sized for laptop-scale synthetic panels; 'large-monthly' and
    'large-daily' mirror the full-scale settings (width 512, batch 512,
    lr 1e-3) used for monthly and daily competition data.
    """
    if name == "desk":
        mcfg = ModelConfig(lookback=max(2 * period, 8), horizon=horizon, n_blocks=2, hidden_width=48)
        tcfg = TrainConfig(batch_size=64, iterations=600, lr=1e-3, ema_decay=0.99)
    elif name == "large-monthly":
        mcfg = ModelConfig(lookback=8 * horizon, horizon=horizon, n_blocks=10, hidden_width=512)
        tcfg = TrainConfig(
            batch_size=512, iterations=11500, lr=1e-3, ema_decay=0.99, origin_range=10 * horizon
        )
    elif name == "large-daily":
        mcfg = ModelConfig(lookback=26 * horizon, horizon=horizon, n_blocks=5, hidden_width=512)
        tcfg = TrainConfig(batch_size=512, iterations=12500, lr=1e-3, ema_decay=0.995)
    else:
        raise ValueError(f"unknown preset {name!r}")
    return mcfg, tcfg
