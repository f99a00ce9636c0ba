import math

import numpy as np
import pytest

from stablesqf.metrics import quantile_grid
from stablesqf.newsvendor import (
    CostDraws,
    DgpConfig,
    SimDraws,
    bias_schedule,
    draw_costs,
    quantile_lookup,
    run_profit_experiment,
    simulate_dgp,
    strategy_profits,
    table2_rows,
    table3_rows,
    toy_metrics,
)


def folded_mean(m, s):
    # E|X| for X ~ N(m, s^2)
    m = abs(m)
    if s == 0.0:
        return m
    cdf = 0.5 * math.erfc(-m / s / math.sqrt(2.0))
    pdf = math.exp(-0.5 * (m / s) ** 2) / math.sqrt(2.0 * math.pi)
    return m * (2.0 * cdf - 1.0) + 2.0 * s * pdf


def test_bias_schedule():
    np.testing.assert_allclose(bias_schedule(8.0, "stable"), [8.0, 4.0, 2.0])
    np.testing.assert_allclose(bias_schedule(8.0, "unstable"), [8.0, -4.0, 2.0])
    np.testing.assert_allclose(bias_schedule(2.0, "stable"), [2.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        bias_schedule(8.0, "wobbly")


def test_config_validation():
    with pytest.raises(ValueError):
        DgpConfig(n_samples=10)
    with pytest.raises(ValueError):
        DgpConfig(mixture_semantics="blend")
    with pytest.raises(ValueError):
        DgpConfig(dispersions=(4.0, 2.5))
    with pytest.raises(ValueError):
        DgpConfig(dispersions=(4.0, -1.0, 2.0))


def test_sigma_variance_flag():
    cfg = DgpConfig(dispersion_is_variance=True, dispersions=(4.0, 2.5, 1.75))
    assert cfg.sigma(0) == 2.0
    assert cfg.sigma(1) == pytest.approx(math.sqrt(2.5))
    cfg2 = DgpConfig()
    assert cfg2.sigma(0) == 4.0


def test_simulate_shapes_and_determinism():
    cfg = DgpConfig(n_periods=40, n_samples=200, grid_m=50)
    sim = simulate_dgp(cfg, seed=5)
    assert sim.alphas.shape == (50,)
    assert sim.mu.shape == sim.demand.shape == sim.sign.shape == (40,)
    assert set(sim.quantiles) == {"stable", "unstable"}
    for k in sim.quantiles:
        assert len(sim.quantiles[k]) == 3
        for q in sim.quantiles[k]:
            assert q.shape == (40, 50)
            assert np.all(np.diff(q, axis=1) >= 0)
    sim2 = simulate_dgp(cfg, seed=5)
    for k in sim.quantiles:
        for a, b in zip(sim.quantiles[k], sim2.quantiles[k]):
            np.testing.assert_array_equal(a, b)
    sim3 = simulate_dgp(cfg, seed=6)
    assert not np.array_equal(sim.demand, sim3.demand)


def test_block_chunking_is_scale_stable():
    # periods beyond the first block must not disturb earlier periods' draws
    small = simulate_dgp(DgpConfig(n_periods=40, n_samples=128, grid_m=20), seed=1)
    # identical seed, same layout: first 40 periods of a longer run share mu/demand
    big = simulate_dgp(DgpConfig(n_periods=60, n_samples=128, grid_m=20), seed=1)
    np.testing.assert_array_equal(small.mu, big.mu[:40])


def test_shared_draws_between_kinds():
    # same bias at t-3 and t-1, so those quantiles are identical arrays;
    # at t-2 the kinds differ by a per-period constant shift of -4*sign
    cfg = DgpConfig(n_periods=30, n_samples=300, grid_m=40)
    sim = simulate_dgp(cfg, seed=2)
    np.testing.assert_array_equal(sim.quantiles["stable"][0], sim.quantiles["unstable"][0])
    np.testing.assert_array_equal(sim.quantiles["stable"][2], sim.quantiles["unstable"][2])
    shift = sim.quantiles["unstable"][1] - sim.quantiles["stable"][1]
    np.testing.assert_allclose(shift, np.tile((-4.0 * sim.sign)[:, None], (1, 40)), atol=1e-12)


def test_metrics_match_gaussian_expectations():
    cfg = DgpConfig(n_periods=1200, n_samples=1200)
    sim = simulate_dgp(cfg, seed=0)
    m = toy_metrics(sim)
    sig = [math.sqrt((1.0 + v * v) / 4.0) for v in cfg.dispersions]
    crps_exp = [folded_mean(d, math.sqrt(1.0 + s * s)) - s / math.sqrt(math.pi)
                for d, s in zip((4.0, 2.0, 1.0), sig)]
    for k in ("stable", "unstable"):
        np.testing.assert_allclose(m.crps[k], crps_exp, rtol=0.03)
    np.testing.assert_allclose(
        m.w1_adjacent["stable"],
        [folded_mean(2.0, sig[0] - sig[1]), folded_mean(1.0, sig[1] - sig[2])],
        rtol=0.03,
    )
    np.testing.assert_allclose(
        m.w1_adjacent["unstable"],
        [folded_mean(6.0, sig[0] - sig[1]), folded_mean(3.0, sig[1] - sig[2])],
        rtol=0.03,
    )
    for k in ("stable", "unstable"):
        assert m.w1_nonadjacent[k] == pytest.approx(folded_mean(3.0, sig[0] - sig[2]), rel=0.03)


def test_equal_accuracy_unequal_stability():
    sim = simulate_dgp(DgpConfig(n_periods=800, n_samples=800), seed=3)
    m = toy_metrics(sim)
    # same accuracy at every origin: exactly at t-3/t-1 (shared arrays), in
    # expectation at t-2 where opposite biases face the same demand draws
    np.testing.assert_array_equal(m.crps["stable"][[0, 2]], m.crps["unstable"][[0, 2]])
    assert m.crps["stable"][1] == pytest.approx(m.crps["unstable"][1], rel=0.12)
    # ... but three-fold revision instability for the sign-flipping forecaster
    ratio = m.w1_adjacent["unstable"] / m.w1_adjacent["stable"]
    np.testing.assert_allclose(ratio, [3.0, 3.0], rtol=0.05)
    assert m.w1_nonadjacent["stable"] == pytest.approx(m.w1_nonadjacent["unstable"], rel=1e-12)


def test_median_sits_between_truth_and_biased_component():
    cfg = DgpConfig(n_periods=60, n_samples=2000)
    sim = simulate_dgp(cfg, seed=4)
    for k in ("stable", "unstable"):
        med = quantile_lookup(sim.quantiles[k][0], sim.alphas, np.full(60, 0.5))
        tau = 8.0 * sim.sign
        lo = np.minimum(sim.mu, sim.mu + tau)
        hi = np.maximum(sim.mu, sim.mu + tau)
        assert np.all(med > lo) and np.all(med < hi)


def test_mixture_semantics_changes_distribution():
    kw = dict(n_periods=300, n_samples=1500)
    avg = toy_metrics(simulate_dgp(DgpConfig(**kw), seed=0))
    mix = toy_metrics(simulate_dgp(DgpConfig(mixture_semantics="mixture", **kw), seed=0))
    # at t-3 the mixture puts half its mass exactly on the truth, so its CRPS
    # against realized demand is clearly lower than the averaged variant's
    assert mix.crps["stable"][0] < 0.85 * avg.crps["stable"][0]


def test_quantile_lookup():
    q = np.array([[1.0, 3.0, 5.0], [10.0, 20.0, 30.0]])
    alphas = np.array([0.25, 0.5, 0.75])
    np.testing.assert_allclose(quantile_lookup(q, alphas, np.array([0.5, 0.5])), [3.0, 20.0])
    np.testing.assert_allclose(quantile_lookup(q, alphas, np.array([0.375, 0.625])), [2.0, 25.0])
    # levels beyond the grid clamp to the outer grid points
    np.testing.assert_allclose(quantile_lookup(q, alphas, np.array([0.01, 0.99])), [1.0, 30.0])
    np.testing.assert_allclose(quantile_lookup(q, alphas, 0.75), [5.0, 30.0])


def test_draw_costs_ranges_and_determinism():
    c = draw_costs(5000, seed=1)
    assert np.all((c.c >= 1.0) & (c.c <= 2.0))
    assert np.all((c.ce2 >= 0.2 * c.c) & (c.ce2 <= 0.3 * c.c))
    assert np.all((c.cc2 >= 0.3 * c.c) & (c.cc2 <= 0.5 * c.c))
    np.testing.assert_allclose(c.ce1, 2.0 * c.ce2)
    np.testing.assert_allclose(c.cc1, 2.0 * c.cc2)
    c2 = draw_costs(5000, seed=1)
    np.testing.assert_array_equal(c.c, c2.c)


def flat_sim(q3, q2, q1, demand):
    alphas = quantile_grid(100)
    mk = lambda v: np.full((1, 100), float(v))
    q = {"stable": [mk(q3), mk(q2), mk(q1)], "unstable": [mk(q3), mk(q2), mk(q1)]}
    return SimDraws(alphas, np.array([float(demand)]), np.array([1.0]),
                    np.array([float(demand)]), q)


def unit_costs():
    return CostDraws(np.array([1.0]), np.array([0.25]), np.array([0.4]))


def test_profit_no_revision():
    # flat forecast at 30 across origins: order 30 once, sell what demand allows
    sim = flat_sim(30, 30, 30, demand=25)
    p = strategy_profits("optimal-myopic", sim, "stable", unit_costs(), 10.0)
    assert p[0] == pytest.approx(10 * 25 - 30 * 1.0)


def test_profit_cancellation_and_sunk_flag():
    # forecast drops 30 -> 20: cancel 10 units at t-2 for a 0.4/unit penalty
    sim = flat_sim(30, 20, 20, demand=25)
    p = strategy_profits("optimal-myopic", sim, "stable", unit_costs(), 10.0)
    assert p[0] == pytest.approx(10 * 20 - 20 * 1.0 - 10 * 0.4)
    p_sunk = strategy_profits("optimal-myopic", sim, "stable", unit_costs(), 10.0,
                              cancelled_cost_sunk=True)
    assert p_sunk[0] == pytest.approx(10 * 20 - 30 * 1.0 - 10 * 0.4)


def test_profit_expedited_topup_averages_cost():
    # forecast rises 10 -> 25: top up 15 units at c+ce2, blended unit cost 1.15
    sim = flat_sim(10, 25, 25, demand=30)
    p = strategy_profits("optimal-myopic", sim, "stable", unit_costs(), 10.0)
    assert p[0] == pytest.approx(10 * 25 - 25 * 1.15)


def test_profit_procrastination_orders_late_at_premium():
    sim = flat_sim(30, 30, 20, demand=25)
    p = strategy_profits("procrastination", sim, "stable", unit_costs(), 10.0)
    # single order of 20 units at c + ce1 = 1.5
    assert p[0] == pytest.approx(10 * 20 - 20 * 1.5)


def test_profit_anticipation_tracks_median():
    sim = flat_sim(12, 18, 18, demand=18)
    p = strategy_profits("anticipation", sim, "stable", unit_costs(), 10.0)
    # 12 at cost 1, then up to the revised median: 6 more at 1.25
    assert p[0] == pytest.approx(10 * 18 - (12 * 1.0 + 6 * 1.25))


def test_unknown_strategy_raises():
    sim = flat_sim(10, 10, 10, demand=10)
    with pytest.raises(ValueError):
        strategy_profits("yolo", sim, "stable", unit_costs(), 10.0)


def test_order_nothing_when_unprofitable():
    # price below cost drives the critical ratio negative; clamped level plus
    # a negative low quantile floors the order at zero
    sim = flat_sim(-5, -5, -5, demand=10)
    p = strategy_profits("optimal-myopic", sim, "stable", unit_costs(), 0.5)
    assert p[0] == pytest.approx(0.0)


def test_experiment_rows_and_procrastination_tie():
    sim = simulate_dgp(DgpConfig(n_periods=300, n_samples=400), seed=0)
    rows = run_profit_experiment(sim, 10.0, "high", seed=0)
    assert [r.strategy for r in rows] == ["optimal-myopic", "anticipation", "procrastination"]
    pro = rows[-1]
    assert pro.delta_pct == 0.0
    assert pro.s_gt_u_pct == 50.0
    assert pro.profit_stable == pro.profit_unstable
    for r in rows[:2]:
        assert r.profit_stable > 0 and r.profit_unstable > 0


def test_stability_premium_grows_as_margin_shrinks():
    sim = simulate_dgp(DgpConfig(n_periods=1000, n_samples=600), seed=0)
    high = run_profit_experiment(sim, 10.0, "high", seed=0)
    low = run_profit_experiment(sim, 5.0, "low", seed=0)
    for h, l in zip(high[:2], low[:2]):
        assert h.delta_pct > 0 and l.delta_pct > 0
        assert l.delta_pct > h.delta_pct


def test_table_row_schemas():
    sim = simulate_dgp(DgpConfig(n_periods=50, n_samples=200), seed=0)
    t2 = table2_rows(toy_metrics(sim))
    assert len(t2) == 6
    assert list(t2[0]) == ["forecaster", "origin", "crps", "w1_adjacent", "w1_nonadjacent"]
    assert math.isnan(t2[0]["w1_adjacent"]) and not math.isnan(t2[1]["w1_adjacent"])
    assert math.isnan(t2[1]["w1_nonadjacent"]) and not math.isnan(t2[2]["w1_nonadjacent"])
    t3 = table3_rows(run_profit_experiment(sim, 10.0, "high", seed=0))
    assert len(t3) == 3
    assert list(t3[0]) == ["margin", "strategy", "profit_unstable", "profit_stable",
                           "delta_pct", "s_gt_u_pct"]
    assert t3[0]["margin"] == "high"
