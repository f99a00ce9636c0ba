"""Command-line front end.

Subcommands: synth, train, evaluate, forecast, stabilize, newsvendor, pareto.
Configuration comes from an optional JSON file (--config) whose values are
overridden by explicit flags.  Every report CSV gets a companion figure next
to it.  All numeric output uses dot decimals; CSVs use LF line endings.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import METHODS, baseline_forecaster
from .checkpoint import load_checkpoint, save_checkpoint
from .data import Dataset, SynthSpec, gen_synthetic, load_dataset, save_dataset
from .evaluation import (
    EvalReport,
    ForecastTrace,
    collect_traces,
    evaluate,
    model_forecaster,
)
from .forecaster import ModelConfig, grid_quantiles, make_window
from .metrics import clip_nonnegative, quantile_grid
from .newsvendor import (
    DgpConfig,
    run_profit_experiment,
    simulate_dgp,
    table2_rows,
    table3_rows,
    toy_metrics,
)
from .plots import plot_by_horizon, plot_fan, plot_newsvendor, plot_pareto, plot_trace
from .stabilize import stabilize_traces
from .training import TrainConfig, preset, train

REPORT_HEADER = ["model", "lambda", "weight", "sCRPS", "sCRPS_c", "sCRPS_t", "sW1", "sW1_c", "sW1_t"]
TABLE2_HEADER = ["forecaster", "origin", "crps", "w1_adjacent", "w1_nonadjacent"]
TABLE3_HEADER = ["margin", "strategy", "profit_unstable", "profit_stable", "delta_pct", "s_gt_u_pct"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if np.isnan(x) else f"{x:.6f}"
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sibling(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config root must be a JSON object")
    return cfg


def _rebuild(instance, overrides: dict):
    """New dataclass instance with fields replaced; re-runs validation."""
    d = {f.name: getattr(instance, f.name) for f in dataclasses.fields(instance)}
    unknown = set(overrides) - set(d)
    if unknown:
        raise ValueError(f"unknown config keys for {type(instance).__name__}: {sorted(unknown)}")
    d.update(overrides)
    if "knots" in d:
        d["knots"] = np.asarray(d["knots"], dtype=float)
    return type(instance)(**d)


def report_row(label, lam, weight, rep: EvalReport):
    lam_s = "" if lam is None else f"{lam:g}"
    return [label, lam_s, weight or ""] + rep.row()


# --- subcommands -----------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _load_config(args.config).get("synth", {})
    spec = _rebuild(SynthSpec(), cfg)
    over = {}
    if args.series is not None:
        over["n_series"] = args.series
    if args.length is not None:
        over["length"] = args.length
    if args.period is not None:
        over["period"] = args.period
    if args.zero_rate is not None:
        over["zero_rate"] = args.zero_rate
    spec = _rebuild(spec, over)
    ds = gen_synthetic(spec, args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} series x {spec.length} obs to {args.out}")
    return 0


def _resolve_train_configs(args):
    cfg = _load_config(args.config)
    horizon = args.horizon if args.horizon is not None else cfg.get("model", {}).get("horizon", 6)
    period = args.period if args.period is not None else cfg.get("period", 1)
    mcfg, tcfg = preset(args.preset, horizon, period)
    mcfg = _rebuild(mcfg, cfg.get("model", {}))
    tcfg = _rebuild(tcfg, cfg.get("train", {}))
    over = {}
    for flag, key in (("lam", "lam"), ("weight", "weight"), ("seed", "seed"),
                      ("iterations", "iterations"), ("batch_size", "batch_size")):
        v = getattr(args, flag)
        if v is not None:
            over[key] = v
    tcfg = _rebuild(tcfg, over)
    return mcfg, tcfg, period


def cmd_train(args) -> int:
    mcfg, tcfg, period = _resolve_train_configs(args)
    ds = load_dataset(args.data, period=period)
    result = train(ds, mcfg, tcfg, test_len=args.test_len)
    save_checkpoint(args.out, result)
    fig = plot_trace(result.trace, _sibling(args.out, "_trace.png"))
    last = result.trace[-1] if result.trace else (0, float("nan"), float("nan"), float("nan"))
    print(f"trained {tcfg.iterations} iterations (final loss {last[3]:.5f}); "
          f"checkpoint {args.out}, trace figure {fig}")
    return 0


def _model_make_fn(ck, alphas):
    store = ck.serving_store()

    def make_fn(series, index):
        if series.sid not in ck.stats:
            raise ValueError(f"series {series.sid!r} has no standardization stats in the checkpoint")
        loc, scale = ck.stats[series.sid]
        return model_forecaster(store, ck.model_cfg, loc, scale, alphas)

    return make_fn


def cmd_evaluate(args) -> int:
    if (args.model is None) == (args.baseline is None):
        raise ValueError("pass exactly one of --model or --baseline")
    ds = load_dataset(args.data, period=args.period or 1)
    if args.model is not None:
        ck = load_checkpoint(args.model)
        h = args.horizon or ck.model_cfg.horizon
        alphas = quantile_grid(ck.train_cfg.grid_m)
        make_fn = _model_make_fn(ck, alphas)
        label = args.label or "sqf"
        lam, weight = ck.train_cfg.lam, ck.train_cfg.weight
    else:
        h = args.horizon or 6
        alphas = quantile_grid(100)
        make_fn = baseline_forecaster(args.baseline, h, alphas, m=args.period or 1, seed=args.seed)
        label = args.label or args.baseline
        lam, weight = None, None
    items = collect_traces(make_fn, ds, args.origins, h, alphas)
    if args.scheme is not None:
        items = [(stabilize_traces(tr, args.scheme, args.ws), v) for tr, v in items]
        label = f"{label}+{args.scheme}{args.ws:g}"
    rep = evaluate(items, alphas)
    _write_csv(args.out, REPORT_HEADER, [report_row(label, lam, weight, rep)])
    fig = plot_by_horizon(rep.scrps_by_horizon, rep.sw1_by_horizon, _sibling(args.out, "_by_horizon.png"))
    print(f"{label}: sCRPS {rep.scrps:.4f} sW1 {_fmt(rep.sw1) or 'nan'} "
          f"({rep.n_quality_items} quality items); report {args.out}, figure {fig}")
    return 0


QCOL_PREFIX = "q"


def write_traces_csv(path, per_series: list[list[ForecastTrace]], alphas):
    header = ["series_id", "origin", "horizon"] + [f"{QCOL_PREFIX}{float(a)!r}" for a in alphas]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for traces in per_series:
            for tr in traces:
                for i in range(tr.q.shape[0]):
                    w.writerow([tr.sid, tr.origin, i + 1] + [repr(float(v)) for v in tr.q[i]])


def read_traces_csv(path):
    """Returns (list of per-series trace lists, alphas), grid from the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["series_id", "origin", "horizon"]:
            raise ValueError(f"{path}: expected trace header series_id,origin,horizon,q...")
        try:
            alphas = np.array([float(c[len(QCOL_PREFIX):]) for c in header[3:]])
        except ValueError:
            raise ValueError(f"{path}: malformed quantile level columns") from None
        if alphas.size == 0 or np.any(np.diff(alphas) <= 0):
            raise ValueError(f"{path}: quantile levels must be increasing")
        rows: dict[str, dict[int, dict[int, np.ndarray]]] = {}
        order = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns")
            sid, origin, hz = row[0], int(row[1]), int(row[2])
            if sid not in rows:
                rows[sid] = {}
                order.append(sid)
            rows[sid].setdefault(origin, {})[hz] = np.array([float(v) for v in row[3:]])
    out = []
    for sid in order:
        traces = []
        for origin in sorted(rows[sid]):
            horizons = rows[sid][origin]
            if sorted(horizons) != list(range(1, len(horizons) + 1)):
                raise ValueError(f"{path}: series {sid!r} origin {origin} has horizon gaps")
            q = np.stack([horizons[i] for i in sorted(horizons)])
            traces.append(ForecastTrace(sid, origin, q, alphas))
        out.append(traces)
    return out, alphas


def cmd_forecast(args) -> int:
    ck = load_checkpoint(args.model)
    ds = load_dataset(args.data, period=args.period or 1)
    if args.series:
        try:
            ds = Dataset([ds.by_id(s) for s in args.series.split(",")])
        except KeyError as exc:
            raise ValueError(f"series {exc.args[0]!r} not in dataset") from None
    alphas = quantile_grid(ck.train_cfg.grid_m)
    store = ck.serving_store()
    cfg = ck.model_cfg
    per_series = []
    for s in ds:
        if s.sid not in ck.stats:
            raise ValueError(f"series {s.sid!r} has no standardization stats in the checkpoint")
        loc, scale = ck.stats[s.sid]
        n = s.values.size
        if args.origins < 1 or args.origins > n:
            raise ValueError(f"--origins must be in [1, {n}] for series {s.sid!r}")
        fn = model_forecaster(store, cfg, loc, scale, alphas)
        traces = []
        for t in range(n - args.origins, n):
            q = clip_nonnegative(fn(s.values[: t + 1]))
            traces.append(ForecastTrace(s.sid, t, q, alphas))
        per_series.append(traces)
    write_traces_csv(args.out, per_series, alphas)
    first = per_series[0][-1]
    hist = ds[0].values[: first.origin + 1]
    fig = plot_fan(hist[-4 * cfg.lookback:], first.q, alphas, _sibling(args.out, "_fan.png"),
                   title=f"{first.sid} @ origin {first.origin}")
    n_rows = sum(len(tr) for tr in per_series) * cfg.horizon
    print(f"wrote {n_rows} forecast rows to {args.out}; fan chart {fig}")
    return 0


def cmd_stabilize(args) -> int:
    per_series, alphas = read_traces_csv(args.traces)
    out = [stabilize_traces(traces, args.scheme, args.ws) for traces in per_series]
    write_traces_csv(args.out, out, alphas)
    n = sum(len(tr) for tr in out)
    print(f"stabilized {n} traces ({args.scheme}, strength {args.ws:g}) -> {args.out}")
    return 0


def cmd_newsvendor(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = DgpConfig(
        n_periods=args.periods,
        n_samples=args.samples,
        mixture_semantics=args.mixture_semantics,
        dispersion_is_variance=args.dispersion_as_variance,
    )
    sim = simulate_dgp(cfg, args.seed)
    t2 = table2_rows(toy_metrics(sim))
    t3 = []
    for margin, price in (("high", 10.0), ("low", 5.0)):
        t3.extend(table3_rows(run_profit_experiment(sim, price, margin, args.seed,
                                                    cancelled_cost_sunk=args.sunk_cancel)))
    p2, p3 = out_dir / "table2.csv", out_dir / "table3.csv"
    _write_csv(p2, TABLE2_HEADER, [[r[k] for k in TABLE2_HEADER] for r in t2])
    _write_csv(p3, TABLE3_HEADER, [[r[k] for k in TABLE3_HEADER] for r in t3])
    fig = plot_newsvendor(t2, [r for r in t3 if r["margin"] == "high"], out_dir / "newsvendor.png")
    for r in t3:
        print(f"{r['margin']:4s} {r['strategy']:16s} stable {r['profit_stable']:8.2f} "
              f"unstable {r['profit_unstable']:8.2f} delta {r['delta_pct']:+.2f}%")
    print(f"wrote {p2}, {p3}, {fig}")
    return 0


def cmd_pareto(args) -> int:
    lams = [float(v) for v in args.lambdas.split(",") if v != ""]
    if not lams:
        raise ValueError("--lambdas must list at least one value")
    ws_grid = [float(v) for v in args.ws_grid.split(",") if v != ""] if args.ws_grid else []
    mcfg, tcfg, period = _resolve_train_configs(args)
    ds = load_dataset(args.data, period=period)
    h = mcfg.horizon
    alphas = quantile_grid(tcfg.grid_m)
    test_len = args.origins + h - 1
    rows = []
    plot_rows = []
    base_items = None
    for lam in lams:
        t_lam = _rebuild(tcfg, {"lam": lam})
        result = train(ds, mcfg, t_lam, test_len=test_len)
        make_fn = _model_make_fn(_AsCheckpoint(result), alphas)
        items = collect_traces(make_fn, ds, args.origins, h, alphas)
        if base_items is None:
            base_items = items
            base_lam = lam
        rep = evaluate(items, alphas)
        label = f"sqf-lam{lam:g}"
        rows.append(report_row(label, lam, t_lam.weight, rep))
        plot_rows.append({"model": label, "sW1": rep.sw1, "sCRPS": rep.scrps})
    for ws in ws_grid:
        items = [(stabilize_traces(tr, args.scheme, ws), v) for tr, v in base_items]
        rep = evaluate(items, alphas)
        label = f"sqf-lam{base_lam:g}+{args.scheme}{ws:g}"
        rows.append(report_row(label, base_lam, tcfg.weight, rep))
        plot_rows.append({"model": label, "sW1": rep.sw1, "sCRPS": rep.scrps})
    _write_csv(args.out, REPORT_HEADER, rows)
    fig = plot_pareto(plot_rows, _sibling(args.out, ".svg"))
    for r in rows:
        print(f"{r[0]:24s} sCRPS {_fmt(r[3])} sW1 {_fmt(r[6])}")
    print(f"frontier {args.out}, scatter {fig}")
    return 0


class _AsCheckpoint:
    """Adapter giving a TrainResult the checkpoint serving interface."""

    def __init__(self, result):
        self.stats = result.stats
        self.model_cfg = result.model_cfg
        self._result = result

    def serving_store(self):
        return self._result.serving_store()


# --- parser ----------------------------------------------------------------


def _add_train_flags(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--preset", default="desk", help="hyperparameter bundle (default desk)")
    p.add_argument("--horizon", type=int, help="forecast horizon h")
    p.add_argument("--period", type=int, help="seasonal period m of the data")
    p.add_argument("--lambda", dest="lam", type=float, help="stability weight in [0, 1]")
    p.add_argument("--weight", choices=("uniform", "center", "tail"), help="level weighting")
    p.add_argument("--seed", type=int, help="training RNG seed")
    p.add_argument("--iterations", type=int, help="override preset iteration count")
    p.add_argument("--batch-size", type=int, dest="batch_size", help="override preset batch size")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stablesqf",
                                 description="spline quantile-function forecasting with stability control")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--series", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--period", type=int)
    p.add_argument("--zero-rate", dest="zero_rate", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--test-len", dest="test_len", type=int, default=0,
                   help="trailing observations excluded from standardization stats")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="rolling-origin evaluation to a report CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--model", help="checkpoint path")
    p.add_argument("--baseline", choices=METHODS, help="evaluate a baseline instead")
    p.add_argument("--origins", type=int, default=4)
    p.add_argument("--horizon", type=int)
    p.add_argument("--period", type=int)
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed for baselines")
    p.add_argument("--scheme", choices=("partial", "full"), help="stabilize before scoring")
    p.add_argument("--ws", type=float, default=0.5, help="stabilization strength")
    p.add_argument("--label", help="model column value in the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("forecast", help="emit quantile matrices for trailing origins")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--origins", type=int, default=1, help="trailing origins to forecast from")
    p.add_argument("--series", help="comma-separated series ids (default all)")
    p.add_argument("--period", type=int)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("stabilize", help="apply a stabilization scheme to stored traces")
    p.add_argument("--traces", required=True, help="trace CSV from `forecast`")
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", choices=("partial", "full", "mean"), default="partial")
    p.add_argument("--ws", type=float, default=0.5)
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("newsvendor", help="run the ordering-strategy simulation")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--periods", type=int, default=2000)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mixture-semantics", dest="mixture_semantics",
                   choices=("average", "mixture"), default="average")
    p.add_argument("--dispersion-as-variance", dest="dispersion_as_variance", action="store_true")
    p.add_argument("--sunk-cancel", dest="sunk_cancel", action="store_true",
                   help="cancelled units keep their purchase cost")
    p.set_defaults(func=cmd_newsvendor)

    p = sub.add_parser("pareto", help="train/evaluate a lambda sweep; write frontier CSV + scatter")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="frontier CSV path")
    p.add_argument("--lambdas", default="0,0.25,0.5", help="comma-separated lambda grid")
    p.add_argument("--origins", type=int, default=4)
    p.add_argument("--scheme", choices=("partial", "full"), default="partial")
    p.add_argument("--ws-grid", dest="ws_grid", help="comma-separated strengths for stabilized variants")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pareto)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
