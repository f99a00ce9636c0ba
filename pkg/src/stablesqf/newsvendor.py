"""Toy ordering experiment: forecast stability's effect on profit.

Two simulated forecasters are equally accurate at every origin but differ in
how their bias evolves: the stable one keeps the bias sign while halving it
from origin to origin, the unstable one flips the sign each revision.  Both
feed three ordering strategies for a perishable product that can be ordered
three periods ahead and revised twice at increasing adjustment cost.  All
random draws (demand, forecast samples, costs) are shared between the two
forecasters so profit differences isolate the stability effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import crps_on_grid, quantile_grid, wasserstein_on_grid

KINDS = ("stable", "unstable")
ORIGINS = ("t-3", "t-2", "t-1")
STRATEGIES = ("optimal-myopic", "anticipation", "procrastination")

_BLOCK = 512  # fixed period-chunk size so RNG streams do not depend on scale


@dataclass
class DgpConfig:
    n_periods: int = 2000
    n_samples: int = 2000
    mu_mean: float = 20.0
    mu_sd: float = 1.0
    demand_sd: float = 1.0
    bias0: float = 8.0
    dispersions: tuple = (4.0, 2.5, 1.75)
    dispersion_is_variance: bool = False
    mixture_semantics: str = "average"  # or "mixture"
    grid_m: int = 100

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError("need at least 100 samples per distribution")
        if self.mixture_semantics not in ("average", "mixture"):
            raise ValueError("mixture_semantics must be 'average' or 'mixture'")
        if any(v <= 0 for v in self.dispersions) or len(self.dispersions) != 3:
            raise ValueError("three positive dispersion values required")

    def sigma(self, origin: int) -> float:
        v = self.dispersions[origin]
        return float(np.sqrt(v)) if self.dispersion_is_variance else float(v)


def bias_schedule(bias0: float, kind: str) -> np.ndarray:
    """Per-origin bias magnitudes with the kind's sign rule applied.

    Each revision halves the magnitude; 'stable' keeps the sign, 'unstable'
    flips it.  Either way the final bias is +bias0/4.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown forecaster kind {kind!r}")
    flip = 1.0 if kind == "stable" else -1.0
    out = [bias0]
    for _ in range(2):
        out.append(flip * 0.5 * out[-1])
    return np.array(out)


@dataclass
class SimDraws:
    alphas: np.ndarray
    mu: np.ndarray
    sign: np.ndarray
    demand: np.ndarray
    quantiles: dict = field(default_factory=dict)  # kind -> list of (P, M) per origin


def simulate_dgp(cfg: DgpConfig, seed: int = 0) -> SimDraws:
    """Draw the shared process and both forecasters' per-period quantiles.

    Under 'average' semantics a forecast sample is the mean of one
    ground-truth draw and one biased-component draw; under 'mixture' it comes
    from one of the two components with equal probability.  Draws are chunked
    over periods in fixed-size blocks so results are scale-stable.
    """
    rng = np.random.default_rng(seed)
    p_n = cfg.n_periods
    alphas = quantile_grid(cfg.grid_m)
    mu = rng.normal(cfg.mu_mean, cfg.mu_sd, size=p_n)
    sign = np.where(rng.uniform(size=p_n) < 0.5, -1.0, 1.0)
    demand = mu + cfg.demand_sd * rng.standard_normal(p_n)
    sched = {k: bias_schedule(cfg.bias0, k) for k in KINDS}
    quantiles = {k: [np.empty((p_n, cfg.grid_m)) for _ in range(3)] for k in KINDS}
    for origin in range(3):
        v = cfg.sigma(origin)
        for start in range(0, p_n, _BLOCK):
            stop = min(start + _BLOCK, p_n)
            rows = stop - start
            u = rng.standard_normal((rows, cfg.n_samples))
            w = rng.standard_normal((rows, cfg.n_samples))
            mu_blk = mu[start:stop, None]
            if cfg.mixture_semantics == "average":
                base = mu_blk + 0.5 * (cfg.demand_sd * u + v * w)
                qb = np.quantile(base, alphas, axis=1).T
                for k in KINDS:
                    shift = 0.5 * sched[k][origin] * sign[start:stop]
                    quantiles[k][origin][start:stop] = qb + shift[:, None]
            else:
                coin = rng.uniform(size=(rows, cfg.n_samples)) < 0.5
                for k in KINDS:
                    tau = (sched[k][origin] * sign[start:stop])[:, None]
                    smp = mu_blk + np.where(coin, cfg.demand_sd * u, tau + v * w)
                    quantiles[k][origin][start:stop] = np.quantile(smp, alphas, axis=1).T
    return SimDraws(alphas, mu, sign, demand, quantiles)


@dataclass
class ToyMetrics:
    crps: dict  # kind -> (3,) per-origin means
    w1_adjacent: dict  # kind -> (2,) means for (t-3,t-2) and (t-2,t-1)
    w1_nonadjacent: dict  # kind -> scalar mean for (t-3, t-1)


def toy_metrics(sim: SimDraws) -> ToyMetrics:
    crps, adj, nonadj = {}, {}, {}
    for k in KINDS:
        q = sim.quantiles[k]
        crps[k] = np.array(
            [crps_on_grid(q[o], sim.demand, sim.alphas).mean() for o in range(3)]
        )
        adj[k] = np.array(
            [wasserstein_on_grid(q[o], q[o + 1], sim.alphas).mean() for o in range(2)]
        )
        nonadj[k] = float(wasserstein_on_grid(q[0], q[2], sim.alphas).mean())
    return ToyMetrics(crps, adj, nonadj)


@dataclass
class CostDraws:
    c: np.ndarray
    ce2: np.ndarray
    cc2: np.ndarray

    @property
    def ce1(self):
        return 2.0 * self.ce2

    @property
    def cc1(self):
        return 2.0 * self.cc2


def draw_costs(n_periods: int, seed: int = 0) -> CostDraws:
    rng = np.random.default_rng((seed, 7))
    c = rng.uniform(1.0, 2.0, size=n_periods)
    ce2 = rng.uniform(0.2 * c, 0.3 * c)
    cc2 = rng.uniform(0.3 * c, 0.5 * c)
    return CostDraws(c, ce2, cc2)


def quantile_lookup(q_rows: np.ndarray, alphas: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Per-row linear interpolation of quantile vectors at per-row levels.

    Levels are clamped to the grid's outer levels, which doubles as the
    documented order-nothing behavior when costs exceed the price.
    """
    lv = np.clip(np.broadcast_to(levels, q_rows.shape[:1]), alphas[0], alphas[-1])
    idx = np.clip(np.searchsorted(alphas, lv, side="right") - 1, 0, alphas.size - 2)
    a0, a1 = alphas[idx], alphas[idx + 1]
    t = (lv - a0) / (a1 - a0)
    q0 = np.take_along_axis(q_rows, idx[:, None], axis=1)[:, 0]
    q1 = np.take_along_axis(q_rows, (idx + 1)[:, None], axis=1)[:, 0]
    return q0 * (1.0 - t) + q1 * t


def strategy_profits(strategy: str, sim: SimDraws, kind: str, costs: CostDraws, price: float,
                     cancelled_cost_sunk: bool = False) -> np.ndarray:
    """Per-period profit for one strategy and forecaster kind.

    Ordering state is a cumulative on-order quantity with a weighted-average
    unit cost.  By default a cancelled unit's purchase is voided and only the
    penalty is paid; with cancelled_cost_sunk the purchase cost stays on the
    books as well.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    q3, q2, q1 = sim.quantiles[kind]
    a = sim.alphas
    p_n = sim.demand.size
    on = np.zeros(p_n)
    ctilde = np.zeros(p_n)
    penalties = np.zeros(p_n)
    committed = np.zeros(p_n)

    def order_up(on, ctilde, committed, target, unit_cost):
        add = np.maximum(target - on, 0.0)
        new_on = on + add
        with np.errstate(invalid="ignore"):
            new_ct = np.where(add > 0, (on * ctilde + add * unit_cost) / np.where(new_on > 0, new_on, 1.0), ctilde)
        return new_on, new_ct, committed + add * unit_cost

    # first commitment
    if strategy == "optimal-myopic":
        tgt = np.maximum(quantile_lookup(q3, a, (price - costs.c) / price), 0.0)
    elif strategy == "anticipation":
        tgt = np.maximum(quantile_lookup(q3, a, np.full(p_n, 0.5)), 0.0)
    else:
        tgt = np.zeros(p_n)
    on, ctilde, committed = order_up(on, ctilde, committed, tgt, costs.c)

    # first revision: order up to the higher band edge, cancel down to the
    # lower one (the bands cannot overlap, so at most one of the two fires)
    if strategy != "procrastination":
        if strategy == "optimal-myopic":
            up = np.maximum(quantile_lookup(q2, a, (price - costs.c - costs.ce2) / price), 0.0)
            down = np.maximum(quantile_lookup(q2, a, (price - costs.c + costs.cc2) / price), 0.0)
        else:
            up = down = np.maximum(quantile_lookup(q2, a, np.full(p_n, 0.5)), 0.0)
        on, ctilde, committed = order_up(on, ctilde, committed, up, costs.c + costs.ce2)
        cancel = np.maximum(on - down, 0.0)
        on = on - cancel
        penalties += cancel * costs.cc2

    # second revision; procrastination places its only order here
    up = np.maximum(quantile_lookup(q1, a, (price - costs.c - costs.ce1) / price), 0.0)
    on, ctilde, committed = order_up(on, ctilde, committed, up, costs.c + costs.ce1)
    if strategy != "procrastination":
        down = np.maximum(quantile_lookup(q1, a, (price - ctilde + costs.cc1) / price), 0.0)
        cancel = np.maximum(on - down, 0.0)
        on = on - cancel
        penalties += cancel * costs.cc1

    sold = np.minimum(on, sim.demand)
    goods_cost = committed if cancelled_cost_sunk else on * ctilde
    return price * sold - goods_cost - penalties


@dataclass
class ProfitRow:
    margin: str
    strategy: str
    profit_unstable: float
    profit_stable: float
    delta_pct: float
    s_gt_u_pct: float


def run_profit_experiment(sim: SimDraws, price: float, margin: str, seed: int = 0,
                          cancelled_cost_sunk: bool = False) -> list[ProfitRow]:
    costs = draw_costs(sim.demand.size, seed)
    rows = []
    for strategy in STRATEGIES:
        p_s = strategy_profits(strategy, sim, "stable", costs, price, cancelled_cost_sunk)
        p_u = strategy_profits(strategy, sim, "unstable", costs, price, cancelled_cost_sunk)
        ms, mu_ = float(p_s.mean()), float(p_u.mean())
        delta = 100.0 * (ms - mu_) / abs(mu_)
        wins = 100.0 * float(np.mean(p_s > p_u) + 0.5 * np.mean(p_s == p_u))
        rows.append(ProfitRow(margin, strategy, mu_, ms, delta, wins))
    return rows


def table2_rows(metrics: ToyMetrics) -> list[dict]:
    """Rows for the forecast-metrics report: one per (forecaster, origin)."""
    rows = []
    for k in KINDS:
        for o, name in enumerate(ORIGINS):
            rows.append(
                {
                    "forecaster": k,
                    "origin": name,
                    "crps": metrics.crps[k][o],
                    "w1_adjacent": metrics.w1_adjacent[k][o - 1] if o > 0 else float("nan"),
                    "w1_nonadjacent": metrics.w1_nonadjacent[k] if o == 2 else float("nan"),
                }
            )
    return rows


def table3_rows(rows: list[ProfitRow]) -> list[dict]:
    return [
        {
            "margin": r.margin,
            "strategy": r.strategy,
            "profit_unstable": r.profit_unstable,
            "profit_stable": r.profit_stable,
            "delta_pct": r.delta_pct,
            "s_gt_u_pct": r.s_gt_u_pct,
        }
        for r in rows
    ]
