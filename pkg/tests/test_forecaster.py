import numpy as np
import pytest

from stablesqf import netcore as nc
from stablesqf.forecaster import (
    ModelConfig,
    forward_blocks,
    forward_numpy,
    forward_tape,
    grid_quantiles,
    layout,
    make_store,
    make_window,
)
from stablesqf.metrics import quantile_grid
from stablesqf.splines import knots_for_grid


def small_cfg(**kw):
    base = dict(lookback=6, horizon=3, n_blocks=2, hidden_width=8, knots=knots_for_grid(20))
    base.update(kw)
    return ModelConfig(**base)


def test_layout_counts():
    cfg = small_cfg()
    names = [n for n, _ in layout(cfg)]
    assert len(names) == cfg.n_blocks * (2 * 4 + 2 + 2 + 2 * cfg.horizon)
    store = make_store(cfg)
    L = cfg.n_knots
    per_block = (6 * 8 + 8) + 3 * (8 * 8 + 8) + (8 * 6 + 6) + (8 * 8 + 8) + 3 * (8 * (1 + L) + 1 + L)
    assert store.size == 2 * per_block


def test_forward_shapes_and_nonnegative_slopes():
    cfg = small_cfg()
    store = make_store(cfg, seed=0)
    x = np.random.default_rng(1).normal(size=(5, cfg.lookback))
    gamma, beta = forward_numpy(store, cfg, x)
    assert gamma.shape == (5, cfg.horizon)
    assert beta.shape == (5, cfg.horizon, cfg.n_knots)
    assert np.all(beta >= 0)


def test_tape_and_numpy_paths_agree():
    cfg = small_cfg(n_blocks=3)
    store = make_store(cfg, seed=7)
    x = np.random.default_rng(2).normal(size=(9, cfg.lookback))
    gamma, beta = forward_numpy(store, cfg, x)
    gvars, bvars = forward_tape(store, cfg, x)
    for i in range(cfg.horizon):
        np.testing.assert_allclose(gvars[i].val[:, 0], gamma[:, i], atol=1e-12)
        np.testing.assert_allclose(bvars[i].val, beta[:, i], atol=1e-12)


def test_zeroed_extra_block_is_identity():
    cfg1 = small_cfg(n_blocks=1)
    cfg2 = small_cfg(n_blocks=2)
    s1 = make_store(cfg1, seed=3)
    s2 = make_store(cfg2)
    s2.theta[: s1.size] = s1.theta
    x = np.random.default_rng(4).normal(size=(4, cfg1.lookback))
    g1, b1 = forward_numpy(s1, cfg1, x)
    g2, b2 = forward_numpy(s2, cfg2, x)
    np.testing.assert_allclose(g1, g2, atol=1e-12)
    np.testing.assert_allclose(b1, b2, atol=1e-12)


def test_backcast_feeds_later_blocks_only():
    cfg = small_cfg(n_blocks=2, relu_backcast=False)
    store = make_store(cfg, seed=5)
    x = np.random.default_rng(6).normal(size=(4, cfg.lookback))
    g_before, _ = forward_numpy(store, cfg, x)
    store.view("block0.backcast.b")[:] += 1.0
    g_after, _ = forward_numpy(store, cfg, x)
    assert not np.allclose(g_before, g_after)

    cfg1 = small_cfg(n_blocks=1, relu_backcast=False)
    s1 = make_store(cfg1, seed=5)
    g1, _ = forward_numpy(s1, cfg1, x)
    s1.view("block0.backcast.b")[:] += 1.0
    g1b, _ = forward_numpy(s1, cfg1, x)
    np.testing.assert_allclose(g1, g1b, atol=1e-12)


def test_quantiles_never_cross():
    cfg = small_cfg(n_blocks=2, hidden_width=16)
    alphas = quantile_grid(100)
    rng = np.random.default_rng(8)
    checked = 0
    for seed in range(5):
        store = make_store(cfg, seed=seed)
        x = rng.normal(size=(2000, cfg.lookback)) * rng.uniform(0.5, 5.0)
        q = grid_quantiles(store, cfg, x, alphas)
        assert np.all(np.diff(q, axis=-1) >= -1e-12)
        checked += q.shape[0]
    assert checked == 10000


def test_full_model_gradient_matches_finite_differences():
    cfg = ModelConfig(lookback=4, horizon=2, n_blocks=2, hidden_width=5, knots=np.array([0.0, 0.4, 0.8]))
    store = make_store(cfg, seed=11)
    rng = np.random.default_rng(12)
    x = rng.normal(size=(3, cfg.lookback))
    y = rng.normal(size=(cfg.horizon, 3))
    alphas = quantile_grid(12)
    from stablesqf.splines import spline_basis

    basis = spline_basis(cfg.knots, alphas)

    def run(theta_values):
        saved = store.theta.copy()
        store.theta[:] = theta_values
        gvars, bvars = forward_tape(store, cfg, x)
        total = None
        for i in range(cfg.horizon):
            q = nc.spline_apply(gvars[i], bvars[i], basis)
            term = nc.vsum(nc.wmean_last(nc.pinball(q, y[i], alphas), np.ones(12)))
            total = term if total is None else nc.add(total, term)
        store.theta[:] = saved
        return total

    out = run(store.theta)
    store.zero_grad()
    nc.backward(out)
    analytic = store.grad.copy()

    def loss_fn(values):
        node = run(values)
        return float(node.val), nc.collect_kinks(node)

    errs = nc.grad_check(loss_fn, store.theta.copy(), analytic, n_probes=10, rng=rng, step=1e-6)
    assert errs.max() < 1e-5


def test_forward_blocks_detail_sums_to_forward():
    cfg = small_cfg(n_blocks=3)
    store = make_store(cfg, seed=9)
    x = np.random.default_rng(1).normal(size=(5, cfg.lookback))
    resids, backs, g_blk, b_blk = forward_blocks(store, cfg, x)
    gamma, beta = forward_numpy(store, cfg, x)
    np.testing.assert_allclose(g_blk.sum(axis=0), gamma, atol=1e-14)
    np.testing.assert_allclose(b_blk.sum(axis=0), beta, atol=1e-14)
    assert len(resids) == cfg.n_blocks + 1 and len(backs) == cfg.n_blocks
    # residual trail telescopes: last residual = input minus all backcasts
    np.testing.assert_allclose(resids[-1], x - sum(backs), atol=1e-10)
    for k in range(cfg.n_blocks):
        np.testing.assert_allclose(resids[k + 1], resids[k] - backs[k], atol=1e-14)


def test_make_window():
    y = np.arange(10.0)
    np.testing.assert_array_equal(make_window(y, 4), [6, 7, 8, 9])
    np.testing.assert_array_equal(make_window(y[:2], 5), [0, 0, 0, 0, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(lookback=0, horizon=2)
    with pytest.raises(ValueError):
        ModelConfig(lookback=4, horizon=2, n_blocks=0)
