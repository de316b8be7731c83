"""Command-line entry point.

Usage::

    marswarm {filter,optimize,backtest,margin,report} CONFIG [options]

Exit codes: 0 success, 2 configuration error, 3 data error, 4 optimization
failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import (
    FREQUENCIES,
    BacktestResult,
    Weights,
    buy_and_hold_benchmark,
    run_backtest,
)
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, MarswarmError, OptimizationError
from .margin import max_safe_leverage, simulate_margin
from .marketdata import PriceMatrix, load_meta, load_prices, slice_period
from .metrics import report as metrics_report
from .pso import OBJECTIVES, make_objective, optimize, sparsify
from .reporting import (
    comparison_table,
    read_weights_csv,
    write_equity_csv,
    write_history_csv,
    write_margin_events_csv,
    write_metrics_json,
    write_rebalance_csv,
    write_weights_csv,
)
from .universe import WeightBounds, age_years, feasibility_check, screen

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_OPTIM = 0, 2, 3, 4
MANIFEST_TIME_KEY = "generated_at"


def _outdir(cfg: RunConfig) -> Path:
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    return cfg.outdir


def _update_manifest(cfg: RunConfig, command: str, entry: dict) -> None:
    """Merge ``entry`` for ``command`` into ``manifest.json``.

    Only the ``generated_at`` key carries wall-clock time.
    """
    path = _outdir(cfg) / "manifest.json"
    manifest = {}
    if path.exists():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            manifest = {}
    manifest.update(
        tool="marswarm",
        version=__version__,
        config_hash=cfg.digest(),
        seed=cfg.pso.seed,
        period={"start": str(cfg.start), "end": str(cfg.end)},
        objective=cfg.objective,
    )
    manifest.setdefault("commands", {})[command] = entry
    manifest[MANIFEST_TIME_KEY] = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _universe(cfg: RunConfig) -> list[str]:
    if cfg.metadata_path is not None:
        tickers = screen(load_meta(cfg.metadata_path), cfg.screening)
    else:
        # no metadata: every priced ticker except the benchmark and exclusions
        candidates = load_prices(cfg.prices_path, cfg.prices_format).tickers
        tickers = [
            t for t in candidates
            if t != cfg.benchmark and t not in cfg.screening.excluded_tickers
        ]
    if not tickers:
        raise DataError("no assets after screening")
    return tickers


def _prices(cfg: RunConfig, tickers) -> PriceMatrix:
    tickers = list(dict.fromkeys(tickers))
    prices = load_prices(cfg.prices_path, cfg.prices_format, tickers)
    return slice_period(prices, cfg.start, cfg.end)


def _bounds(cfg: RunConfig, tickers) -> WeightBounds:
    bounds = WeightBounds.from_mapping(tickers, cfg.bound_limits, cfg.bound_default)
    rep = feasibility_check(bounds)
    if not rep.ok:
        raise ConfigError(f"weight_bounds infeasible for the screened universe: {rep.message}")
    return bounds


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def cmd_filter(cfg: RunConfig) -> int:
    if cfg.metadata_path is None:
        raise ConfigError("paths.metadata is required for 'filter'")
    meta = {m.ticker: m for m in load_meta(cfg.metadata_path)}
    tickers = screen(list(meta.values()), cfg.screening)
    if not tickers:
        raise DataError("no assets after screening")
    as_of = cfg.screening.as_of or cfg.start
    rows = []
    for rank, t in enumerate(tickers, start=1):
        age = age_years(meta[t].first_trade_date, as_of)
        rows.append((t, repr(meta[t].market_cap), rank, f"{age:.2f}"))
    out = _outdir(cfg) / "universe.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("ticker,market_cap,cap_rank,age_years\n")
        for r in rows:
            fh.write(",".join(str(c) for c in r) + "\n")
    print(f"{len(tickers)} assets after screening (as of {as_of}):")
    for t, cap, rank, age in rows:
        print(f"{rank:4d}  {t:<8} cap={float(cap):.4g}  age={age}y")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    tickers = _universe(cfg)
    prices = _prices(cfg, tickers)
    bounds = _bounds(cfg, tickers)
    objective = make_objective(cfg.objective, prices, cfg.backtest)
    result = optimize(prices, objective, bounds, cfg.backtest, cfg.pso)
    weights, fitness = result.weights, result.fitness
    entry = {
        "universe": list(prices.tickers),
        "window": {"first": str(prices.dates[0]), "last": str(prices.dates[-1]), "rows": len(prices)},
        "pso": asdict(cfg.pso),
        "backtest": asdict(cfg.backtest),
        "iterations": result.iterations,
        "fitness": fitness,
    }
    if cfg.max_assets is not None:
        weights = sparsify(weights, cfg.max_assets, bounds)
        fitness = objective(weights.values)
        entry.update(max_assets=cfg.max_assets, sparse_fitness=fitness, dense_fitness=result.fitness)
    if not np.isfinite(fitness):
        raise OptimizationError("optimization produced no feasible solution")

    out = _outdir(cfg)
    write_weights_csv(out / "weights.csv", weights)
    write_history_csv(out / "history.csv", result.history)
    _update_manifest(cfg, "optimize", entry)

    insample = run_backtest(prices, weights, cfg.backtest)
    print(f"objective {cfg.objective}: {fitness:.6g} after {result.iterations} iterations")
    print(
        comparison_table(
            {"Optimized Portfolio": insample.report},
            {"Optimized Portfolio": weights.as_dict()},
            [("Period", f"{prices.dates[0]} to {prices.dates[-1]}"),
             ("Rebalancing frequency", cfg.backtest.rebalance)],
        ),
        end="",
    )
    print(f"wrote {out / 'weights.csv'}, {out / 'history.csv'}, {out / 'manifest.json'}")
    return EXIT_OK


def _load_weights(cfg: RunConfig, weights_path) -> Weights:
    path = Path(weights_path) if weights_path else cfg.outdir / "weights.csv"
    return read_weights_csv(path)


def _run_pair(cfg: RunConfig, weights: Weights) -> tuple[BacktestResult, BacktestResult | None, PriceMatrix]:
    extra = [cfg.benchmark] if cfg.benchmark else []
    prices = _prices(cfg, list(weights.tickers) + extra)
    portfolio = run_backtest(prices.select(weights.tickers), weights, cfg.backtest)
    bench = buy_and_hold_benchmark(prices, cfg.benchmark, cfg.backtest) if cfg.benchmark else None
    return portfolio, bench, prices


def _write_backtest(cfg, portfolio, bench, extra_columns=None, extra_weights=None) -> str:
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        write_equity_csv(out / "equity.csv", portfolio.curve)
        write_rebalance_csv(out / "rebalance_events.csv", portfolio)
        if bench is not None:
            write_equity_csv(out / "benchmark_equity.csv", bench.curve)
    if "json" in cfg.formats:
        write_metrics_json(out / "metrics.json", portfolio.report)
        if bench is not None:
            write_metrics_json(out / "benchmark_metrics.json", bench.report)
    columns = {"Optimized Portfolio": portfolio.report}
    weights = {"Optimized Portfolio": portfolio.weights.as_dict()}
    if bench is not None:
        columns["Benchmark"] = bench.report
        weights["Benchmark"] = {cfg.benchmark: 1.0}
    columns.update(extra_columns or {})
    weights.update(extra_weights or {})
    dates = portfolio.curve.dates
    table = comparison_table(
        columns,
        weights,
        [("Period", f"{dates[0]} to {dates[-1]}"), ("Rebalancing frequency", cfg.backtest.rebalance)],
    )
    if "text" in cfg.formats:
        (out / "comparison.txt").write_text(table, encoding="utf-8")
    return table


def cmd_backtest(cfg: RunConfig, weights_path=None) -> int:
    weights = _load_weights(cfg, weights_path)
    portfolio, bench, _ = _run_pair(cfg, weights)
    print(_write_backtest(cfg, portfolio, bench), end="")
    _update_manifest(cfg, "backtest", {"weights": weights.nonzero()})
    return EXIT_OK


def _margin(cfg: RunConfig, portfolio: BacktestResult):
    levered, events = simulate_margin(portfolio.curve, cfg.margin)
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        write_equity_csv(out / "levered_equity.csv", levered)
    write_margin_events_csv(out / "margin_events.csv", events)
    mdd = portfolio.report.max_drawdown
    safe = max_safe_leverage(mdd, cfg.margin.maintenance_ratio)
    calls = sum(e.action == "call_issued" for e in events)
    print(
        f"margin: leverage {cfg.margin.leverage:g}, maintenance {_pct(cfg.margin.maintenance_ratio)}, "
        f"{calls} margin call(s), {len(events)} event(s)"
    )
    print(f"max safe leverage for realized MDD {_pct(mdd)}: {safe:.4f}")
    for e in events:
        print(f"  {e.date}  {e.action:<11} equity ratio {e.equity_ratio:.4f}")
    return levered, events, safe


def cmd_margin(cfg: RunConfig, weights_path=None) -> int:
    if cfg.margin is None:
        raise ConfigError("missing [margin] section in config")
    weights = _load_weights(cfg, weights_path)
    portfolio, _, _ = _run_pair(cfg, weights)
    _, events, safe = _margin(cfg, portfolio)
    _update_manifest(
        cfg, "margin", {"margin": asdict(cfg.margin), "events": len(events), "max_safe_leverage": safe}
    )
    return EXIT_OK


def cmd_report(cfg: RunConfig, weights_path=None) -> int:
    weights = _load_weights(cfg, weights_path)
    portfolio, bench, _ = _run_pair(cfg, weights)
    extra, extra_w = {}, {}
    entry = {"weights": weights.nonzero()}
    if cfg.margin is not None:
        levered, events, safe = _margin(cfg, portfolio)
        label = f"Levered x{cfg.margin.leverage:g}"
        extra[label] = metrics_report(levered, cfg.backtest.periods_per_year)
        extra_w[label] = portfolio.weights.as_dict()
        entry.update(events=len(events), max_safe_leverage=safe)
    print(_write_backtest(cfg, portfolio, bench, extra, extra_w), end="")
    _update_manifest(cfg, "report", entry)
    return EXIT_OK


COMMANDS = {
    "filter": cmd_filter,
    "optimize": cmd_optimize,
    "backtest": cmd_backtest,
    "margin": cmd_margin,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marswarm",
        description="Screen a universe, optimize MAR with PSO, backtest and simulate margin.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="run config file (INI)")
        p.add_argument("--seed", type=int)
        p.add_argument("--start", help="override period.start (YYYY-MM-DD)")
        p.add_argument("--end", help="override period.end (YYYY-MM-DD)")
        p.add_argument("--objective", choices=OBJECTIVES)
        p.add_argument("--rebalance", choices=FREQUENCIES)
        p.add_argument("--jobs", type=int, dest="n_jobs", help="parallel fitness workers")
        p.add_argument("--outdir")
        if name in ("backtest", "margin", "report"):
            p.add_argument("--weights", help="weights CSV (default: <outdir>/weights.csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which matches the config-error code
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed,
            start=args.start,
            end=args.end,
            objective=args.objective,
            rebalance=args.rebalance,
            n_jobs=args.n_jobs,
            outdir=args.outdir,
        )
        func = COMMANDS[args.command]
        if args.command in ("backtest", "margin", "report"):
            return func(cfg, args.weights)
        return func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OptimizationError as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_OPTIM
    except MarswarmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
