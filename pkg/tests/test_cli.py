import csv
import json

import numpy as np
import pytest

from conftest import BASE_CONFIG, make_project
from marswarm.backtest import BacktestConfig, run_backtest
from marswarm.cli import main
from marswarm.marketdata import load_prices, slice_period
from marswarm.metrics import report
from marswarm.reporting import curve_from_csv, read_metrics_json, read_weights_csv
from marswarm.synthetic import gbm_prices


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def set_weights(root, mapping):
    lines = ["ticker,weight"] + [f"{t},{w!r}" for t, w in mapping.items()]
    (root / "w.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(root / "w.csv")


def test_filter_writes_ranked_universe(tmp_path, capsys):
    cfg = make_project(tmp_path)
    assert main(["filter", str(cfg)]) == 0
    got = rows(tmp_path / "out" / "universe.csv")
    assert [r["ticker"] for r in got] == ["AAA", "BBB", "CCC"]
    assert [r["cap_rank"] for r in got] == ["1", "2", "3"]
    assert float(got[1]["age_years"]) == pytest.approx(13.59, abs=0.01)
    assert "3 assets after screening" in capsys.readouterr().out


def test_filter_empty_metadata_exit_3(tmp_path, capsys):
    cfg = make_project(tmp_path, meta_rows=[])
    assert main(["filter", str(cfg)]) == 3
    assert "no assets after screening" in capsys.readouterr().err


def test_filter_required_and_excluded_exit_2(tmp_path, capsys):
    text = BASE_CONFIG.replace("min_history_years = 1", "min_history_years = 1\nrequired_tickers = AAA\nexcluded_tickers = AAA")
    cfg = make_project(tmp_path, config=text)
    assert main(["filter", str(cfg)]) == 2
    assert "AAA" in capsys.readouterr().err


def test_filter_required_too_young_exit_2(tmp_path):
    text = BASE_CONFIG.replace("min_history_years = 1", "min_history_years = 1\nrequired_tickers = DDD")
    assert main(["filter", str(make_project(tmp_path, config=text))]) == 2


def test_optimize_outputs_and_manifest(tmp_path, capsys):
    cfg = make_project(tmp_path)
    assert main(["optimize", str(cfg)]) == 0
    out = tmp_path / "out"
    w = read_weights_csv(out / "weights.csv")
    assert w.tickers == ("AAA", "BBB", "CCC")
    hist = rows(out / "history.csv")
    assert hist[0]["iteration"] == "0"
    fitness = [float(r["best_fitness"]) for r in hist]
    assert fitness == sorted(fitness)
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("version", "config_hash", "seed", "period", "objective", "generated_at"):
        assert key in manifest
    assert manifest["seed"] == 7
    assert manifest["commands"]["optimize"]["universe"] == ["AAA", "BBB", "CCC"]
    printed = capsys.readouterr().out
    assert "CAGR" in printed and "Optimized Portfolio" in printed


def test_optimize_byte_identical_serial_and_parallel(tmp_path):
    cfg = make_project(tmp_path)
    outputs = []
    for i, jobs in enumerate(["1", "1", "3"]):
        assert main(["optimize", str(cfg), "--outdir", str(tmp_path / f"o{i}"), "--jobs", jobs]) == 0
        outputs.append([(tmp_path / f"o{i}" / f).read_bytes() for f in ("weights.csv", "history.csv")])
    assert outputs[0] == outputs[1] == outputs[2]


def test_optimize_seed_override_changes_manifest(tmp_path):
    cfg = make_project(tmp_path)
    assert main(["optimize", str(cfg), "--seed", "99"]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["seed"] == 99


def test_optimize_missing_price_column_exit_3(tmp_path, capsys):
    prices = gbm_prices(["SPY", "AAA", "BBB"], n_days=300, seed=1)
    cfg = make_project(tmp_path, prices=prices)
    assert main(["optimize", str(cfg)]) == 3
    assert "CCC" in capsys.readouterr().err


def test_optimize_infeasible_bounds_exit_2(tmp_path):
    text = BASE_CONFIG + "\n[weight_bounds]\ndefault = 0, 0.2\n"
    assert main(["optimize", str(make_project(tmp_path, config=text))]) == 2


def test_optimize_dominated_asset(tmp_path):
    from marswarm.marketdata import PriceMatrix
    from marswarm.synthetic import business_days

    dates = business_days("2015-01-02", 756)
    up = 100 * 1.001 ** np.arange(756)
    pm = PriceMatrix(dates, ["SPY", "AAA", "BBB"], np.column_stack([up, up, np.full(756, 50.0)]))
    text = BASE_CONFIG.replace("top_n_by_cap = 3", "top_n_by_cap = 2").replace("max_iters = 40", "max_iters = 200")
    cfg = make_project(tmp_path, prices=pm, meta_rows=[("AAA", 2.0, "2000-01-03"), ("BBB", 1.0, "2000-01-03")], config=text)
    assert main(["optimize", str(cfg)]) == 0
    assert read_weights_csv(tmp_path / "out" / "weights.csv").as_dict()["AAA"] >= 0.999


def test_optimize_max_assets(tmp_path):
    text = BASE_CONFIG.replace("seed = 7", "seed = 7\nmax_assets = 1")
    cfg = make_project(tmp_path, config=text)
    assert main(["optimize", str(cfg)]) == 0
    w = read_weights_csv(tmp_path / "out" / "weights.csv")
    assert len(w.nonzero()) == 1
    entry = json.loads((tmp_path / "out" / "manifest.json").read_text())["commands"]["optimize"]
    assert entry["max_assets"] == 1 and "sparse_fitness" in entry


def test_backtest_benchmark_self_comparison(tmp_path):
    cfg = make_project(tmp_path)
    assert main(["backtest", str(cfg), "--weights", set_weights(tmp_path, {"SPY": 1.0})]) == 0
    out = tmp_path / "out"
    mine = read_metrics_json(out / "metrics.json").to_dict()
    bench = read_metrics_json(out / "benchmark_metrics.json").to_dict()
    # annual rebalancing of a single asset is a no-op up to the last ulp
    for key in mine:
        assert mine[key] == pytest.approx(bench[key], rel=1e-12)
    table = (out / "comparison.txt").read_text().splitlines()
    for label in ("CAGR ", "Maximum Drawdown", "Sharpe Ratio", "Sortino Ratio", "CAGR/MaxDD Ratio"):
        row = next(line for line in table if line.startswith(label))
        cells = row.split()
        assert cells[-1] == cells[-2], row


def test_backtest_metrics_match_library(tmp_path):
    cfg = make_project(tmp_path)
    weights = {"AAA": 0.25, "BBB": 0.5, "CCC": 0.25}
    assert main(["backtest", str(cfg), "--weights", set_weights(tmp_path, weights), "--rebalance", "quarterly"]) == 0
    prices = slice_period(load_prices(tmp_path / "prices.csv"), "2015-01-02", "2017-12-29")
    expected = run_backtest(prices.select(list(weights)), weights, BacktestConfig(rebalance="quarterly"))
    out = tmp_path / "out"
    assert read_metrics_json(out / "metrics.json") == expected.report
    curve = curve_from_csv(out / "equity.csv")
    assert np.array_equal(curve.values, expected.curve.values)
    assert report(curve) == expected.report
    eq = rows(out / "equity.csv")
    assert float(eq[5]["log10_value"]) == pytest.approx(np.log10(float(eq[5]["value"])), abs=1e-15)
    events = rows(out / "rebalance_events.csv")
    # business days 2015-01-02 .. 2017-11-24: twelve quarter starts
    assert [e["date"][5:7] for e in events] == ["01", "04", "07", "10"] * 3
    assert float(events[0]["turnover"]) == pytest.approx(1.0)


def test_backtest_unknown_weight_ticker_exit_3(tmp_path, capsys):
    cfg = make_project(tmp_path)
    assert main(["backtest", str(cfg), "--weights", set_weights(tmp_path, {"ZZZ": 1.0})]) == 3
    assert "ZZZ" in capsys.readouterr().err


def test_backtest_missing_weights_file_exit_3(tmp_path):
    cfg = make_project(tmp_path)
    assert main(["backtest", str(cfg)]) == 3


def test_margin_leverage_one_identity(tmp_path):
    text = BASE_CONFIG.replace("leverage = 1.5", "leverage = 1")
    cfg = make_project(tmp_path, config=text)
    assert main(["margin", str(cfg), "--weights", set_weights(tmp_path, {"AAA": 0.5, "CCC": 0.5})]) == 0
    out = tmp_path / "out"
    assert rows(out / "margin_events.csv") == []
    levered = curve_from_csv(out / "levered_equity.csv")
    prices = slice_period(load_prices(tmp_path / "prices.csv"), "2015-01-02", "2017-12-29")
    base = run_backtest(prices.select(["AAA", "CCC"]), [0.5, 0.5], BacktestConfig()).curve
    np.testing.assert_allclose(levered.values, base.values, rtol=1e-12)


def test_margin_above_safe_bound_fires(tmp_path, capsys):
    from marswarm.margin import max_safe_leverage

    from marswarm.marketdata import PriceMatrix
    from marswarm.synthetic import business_days

    # fixture curve whose worst drawdown starts on the first day
    dates = business_days("2015-01-02", 600)
    path = np.concatenate([np.linspace(100, 70, 200), np.linspace(70, 130, 400)])
    prices = PriceMatrix(dates, ["SPY", "AAA"], np.column_stack([path, path]))
    mdd = run_backtest(prices.select(["AAA"]), [1.0], BacktestConfig()).report.max_drawdown
    assert mdd == pytest.approx(0.3)
    lev = max_safe_leverage(mdd, 0.25) * 1.2
    text = BASE_CONFIG.replace("leverage = 1.5", f"leverage = {lev!r}")
    cfg = make_project(tmp_path, prices=prices, config=text)
    assert main(["margin", str(cfg), "--weights", set_weights(tmp_path, {"AAA": 1.0})]) == 0
    events = rows(tmp_path / "out" / "margin_events.csv")
    assert any(e["action"] in ("call_issued", "exhausted") for e in events)
    assert "max safe leverage" in capsys.readouterr().out


def test_margin_missing_section_exit_2(tmp_path, capsys):
    text = BASE_CONFIG.split("[margin]")[0]
    cfg = make_project(tmp_path, config=text)
    assert main(["margin", str(cfg), "--weights", set_weights(tmp_path, {"AAA": 1.0})]) == 2
    assert "margin" in capsys.readouterr().err


def test_margin_maintenance_above_initial_ratio_exit_2(tmp_path, capsys):
    text = BASE_CONFIG.replace("leverage = 1.5", "leverage = 3").replace("maintenance_ratio = 0.25", "maintenance_ratio = 0.4")
    cfg = make_project(tmp_path, config=text)
    assert main(["margin", str(cfg), "--weights", set_weights(tmp_path, {"AAA": 1.0})]) == 2
    assert "1/leverage" in capsys.readouterr().err


def test_report_end_to_end(tmp_path):
    cfg = make_project(tmp_path)
    assert main(["optimize", str(cfg)]) == 0
    assert main(["report", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("equity.csv", "benchmark_equity.csv", "metrics.json", "benchmark_metrics.json",
                 "margin_events.csv", "levered_equity.csv", "comparison.txt", "manifest.json"):
        assert (out / name).is_file(), name
    table = (out / "comparison.txt").read_text()
    assert "Levered x1.5" in table and "Benchmark" in table
    assert set(json.loads((out / "manifest.json").read_text())["commands"]) == {"optimize", "report"}


def test_report_formats_subset(tmp_path):
    cfg = make_project(tmp_path, config=BASE_CONFIG + "\n[report]\nformats = json\n")
    assert main(["backtest", str(cfg), "--weights", set_weights(tmp_path, {"AAA": 1.0})]) == 0
    out = tmp_path / "out"
    assert (out / "metrics.json").is_file()
    assert not (out / "equity.csv").exists() and not (out / "comparison.txt").exists()


def test_usage_errors_exit_2(tmp_path):
    assert main([]) == 2
    assert main(["optimize", str(tmp_path / "nope.ini")]) == 2
    cfg = make_project(tmp_path)
    assert main(["optimize", str(cfg), "--start", "2018-01-01"]) == 2


def test_window_without_data_exit_3(tmp_path):
    cfg = make_project(tmp_path)
    assert main(["optimize", str(cfg), "--start", "2019-01-01", "--end", "2019-06-01"]) == 3


def test_without_metadata_uses_all_but_benchmark(tmp_path):
    text = BASE_CONFIG.replace("metadata = meta.csv\n", "")
    cfg = make_project(tmp_path, config=text)
    assert main(["optimize", str(cfg)]) == 0
    assert read_weights_csv(tmp_path / "out" / "weights.csv").tickers == ("AAA", "BBB", "CCC", "DDD")
