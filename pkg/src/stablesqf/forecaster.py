"""Residual block network that maps a lookback window to spline coefficients.

The network is a stack of blocks.  Every block sees the running residual of
the input window, pushes it through a shared dense stack, then branches into
a backcast head (what the block explains, subtracted from the residual) and a
spline head producing per-horizon coefficients (gamma, beta_1..L).  Block
outputs are summed across the stack; slope increments pass through a ReLU per
block, so each block's contribution is a valid quantile function and the sum
stays one.

There are two forward implementations over the same parameter store: a plain
numpy path used for serving and a graph-building path used for training.
They must agree to machine precision; the test suite enforces this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import netcore as nc
from .splines import default_knots, spline_basis, validate_knots


@dataclass
class ModelConfig:
    lookback: int
    horizon: int
    n_blocks: int = 2
    hidden_width: int = 64
    knots: np.ndarray = field(default_factory=default_knots)
    relu_backcast: bool = True

    def __post_init__(self):
        self.knots = validate_knots(self.knots)
        if self.lookback < 1 or self.horizon < 1:
            raise ValueError("lookback and horizon must be positive")
        if self.n_blocks < 1 or self.hidden_width < 1:
            raise ValueError("need at least one block and one hidden unit")

    @property
    def n_knots(self) -> int:
        return self.knots.size


N_SHARED = 4


def layout(cfg: ModelConfig):
    """Parameter layout: names and shapes, in initialization order."""
    t, w, L = cfg.lookback, cfg.hidden_width, cfg.n_knots
    entries = []
    for k in range(cfg.n_blocks):
        dims = [t] + [w] * N_SHARED
        for j in range(N_SHARED):
            entries.append((f"block{k}.shared{j}.w", (dims[j], dims[j + 1])))
            entries.append((f"block{k}.shared{j}.b", (dims[j + 1],)))
        entries.append((f"block{k}.backcast.w", (w, t)))
        entries.append((f"block{k}.backcast.b", (t,)))
        entries.append((f"block{k}.stem.w", (w, w)))
        entries.append((f"block{k}.stem.b", (w,)))
        for i in range(cfg.horizon):
            entries.append((f"block{k}.head{i}.w", (w, 1 + L)))
            entries.append((f"block{k}.head{i}.b", (1 + L,)))
    return entries


def make_store(cfg: ModelConfig, seed: int | None = None) -> nc.ParamStore:
    store = nc.ParamStore(layout(cfg))
    if seed is not None:
        nc.init_uniform(store, np.random.default_rng(seed))
    return store


def forward_numpy(store: nc.ParamStore, cfg: ModelConfig, x: np.ndarray):
    """Serving path.  x is (B, lookback); returns gamma (B, h), beta (B, h, L)."""
    x = np.asarray(x, dtype=float)
    b_sz = x.shape[0]
    gamma = np.zeros((b_sz, cfg.horizon))
    beta = np.zeros((b_sz, cfg.horizon, cfg.n_knots))
    resid = x
    for k in range(cfg.n_blocks):
        h = resid
        for j in range(N_SHARED):
            h = np.maximum(h @ store.view(f"block{k}.shared{j}.w") + store.view(f"block{k}.shared{j}.b"), 0.0)
        back = h @ store.view(f"block{k}.backcast.w") + store.view(f"block{k}.backcast.b")
        if cfg.relu_backcast:
            back = np.maximum(back, 0.0)
        stem = np.maximum(h @ store.view(f"block{k}.stem.w") + store.view(f"block{k}.stem.b"), 0.0)
        for i in range(cfg.horizon):
            theta = stem @ store.view(f"block{k}.head{i}.w") + store.view(f"block{k}.head{i}.b")
            gamma[:, i] += theta[:, 0]
            beta[:, i] += np.maximum(theta[:, 1:], 0.0)
        resid = resid - back
    return gamma, beta


def forward_tape(store: nc.ParamStore, cfg: ModelConfig, x: np.ndarray):
    """Training path.  Returns per-horizon lists of gamma (B, 1) and beta (B, L) nodes."""
    leaf = {name: store.leaf(name) for name in store.names()}
    resid = nc.Var(np.asarray(x, dtype=float))
    gammas: list[nc.Var | None] = [None] * cfg.horizon
    betas: list[nc.Var | None] = [None] * cfg.horizon
    for k in range(cfg.n_blocks):
        h = resid
        for j in range(N_SHARED):
            h = nc.relu(nc.linear(h, leaf[f"block{k}.shared{j}.w"], leaf[f"block{k}.shared{j}.b"]))
        back = nc.linear(h, leaf[f"block{k}.backcast.w"], leaf[f"block{k}.backcast.b"])
        if cfg.relu_backcast:
            back = nc.relu(back)
        stem = nc.relu(nc.linear(h, leaf[f"block{k}.stem.w"], leaf[f"block{k}.stem.b"]))
        for i in range(cfg.horizon):
            theta = nc.linear(stem, leaf[f"block{k}.head{i}.w"], leaf[f"block{k}.head{i}.b"])
            g_i = nc.cols(theta, 0, 1)
            b_i = nc.relu(nc.cols(theta, 1, 1 + cfg.n_knots))
            gammas[i] = g_i if gammas[i] is None else nc.add(gammas[i], g_i)
            betas[i] = b_i if betas[i] is None else nc.add(betas[i], b_i)
        resid = nc.sub(resid, back)
    return gammas, betas


def forward_blocks(store: nc.ParamStore, cfg: ModelConfig, x: np.ndarray):
    """Serving path with per-block detail.

    Returns (residuals, backcasts, gammas, betas): the residual trail with
    n_blocks+1 entries starting at the input, the per-block backcasts, and the
    per-block coefficient contributions of shape (n_blocks, B, h[, L]).
    Summing the contributions reproduces forward_numpy exactly.
    """
    x = np.asarray(x, dtype=float)
    b_sz = x.shape[0]
    resids = [x]
    backs = []
    gammas = np.zeros((cfg.n_blocks, b_sz, cfg.horizon))
    betas = np.zeros((cfg.n_blocks, b_sz, cfg.horizon, cfg.n_knots))
    resid = x
    for k in range(cfg.n_blocks):
        h = resid
        for j in range(N_SHARED):
            h = np.maximum(h @ store.view(f"block{k}.shared{j}.w") + store.view(f"block{k}.shared{j}.b"), 0.0)
        back = h @ store.view(f"block{k}.backcast.w") + store.view(f"block{k}.backcast.b")
        if cfg.relu_backcast:
            back = np.maximum(back, 0.0)
        stem = np.maximum(h @ store.view(f"block{k}.stem.w") + store.view(f"block{k}.stem.b"), 0.0)
        for i in range(cfg.horizon):
            theta = stem @ store.view(f"block{k}.head{i}.w") + store.view(f"block{k}.head{i}.b")
            gammas[k, :, i] = theta[:, 0]
            betas[k, :, i] = np.maximum(theta[:, 1:], 0.0)
        backs.append(back)
        resid = resid - back
        resids.append(resid)
    return resids, backs, gammas, betas


def grid_quantiles(store: nc.ParamStore, cfg: ModelConfig, x: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Quantile values on a level grid for each window and horizon: (B, h, M)."""
    gamma, beta = forward_numpy(store, cfg, x)
    basis = spline_basis(cfg.knots, alphas)
    return gamma[..., None] + beta @ basis


def make_window(y: np.ndarray, lookback: int) -> np.ndarray:
    """Last `lookback` values of y, zero-padded at the front if y is shorter."""
    y = np.asarray(y, dtype=float)
    if y.size >= lookback:
        return y[-lookback:]
    return np.concatenate([np.zeros(lookback - y.size), y])
