import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marswarm.backtest import (
    FREQUENCIES,
    BacktestConfig,
    Backtester,
    Weights,
    buy_and_hold_benchmark,
    rebalance_dates,
    run_backtest,
)
from marswarm.errors import TickerMismatch, TooFewRows, UnknownTicker
from marswarm.marketdata import PriceMatrix
from marswarm.synthetic import business_days, gbm_prices


def naive_backtest(prices, weights, frequency, initial=1.0, bps=0.0):
    """Share-count simulation, one day at a time, rebalancing on period change."""
    dates = [d.item() for d in prices.dates]
    p = prices.prices
    shares = np.zeros(len(weights))
    value = initial
    out, pre_values = [], []

    def period(d):
        return {
            "none": None,
            "annual": d.year,
            "quarterly": (d.year, (d.month - 1) // 3),
            "monthly": (d.year, d.month),
        }[frequency]

    for t, d in enumerate(dates):
        value = float(shares @ p[t]) if t else initial
        if t == 0 or period(d) != period(dates[t - 1]):
            current = shares * p[t]
            target = value * weights
            cost = bps / 1e4 * np.abs(target - current).sum()
            pre_values.append(value)
            value -= cost
            shares = value * weights / p[t]
        out.append(value)
    return np.array(out), pre_values


def test_single_asset_tracks_price():
    pm = gbm_prices(["X"], n_days=800, seed=1)
    for freq in FREQUENCIES:
        res = run_backtest(pm, {"X": 1.0}, BacktestConfig(rebalance=freq, initial_value=10.0))
        np.testing.assert_allclose(res.curve.values, 10.0 * pm.prices[:, 0] / pm.prices[0, 0], rtol=1e-12)


def test_two_assets_no_rebalance_hand_oracle():
    dates = np.array(["2020-01-02", "2020-06-01", "2021-01-04"], dtype="datetime64[D]")
    pm = PriceMatrix(dates, ["A", "B"], [[10, 5], [15, 5], [20, 5]])
    res = run_backtest(pm, {"A": 0.5, "B": 0.5}, BacktestConfig(rebalance="none"))
    # 0.05 shares of A and 0.1 of B: 0.05 * 20 + 0.1 * 5
    assert res.curve.values[-1] == pytest.approx(1.5, abs=1e-15)
    assert res.curve.values[1] == pytest.approx(1.25, abs=1e-15)


def test_rebalance_dates_calendar_scan():
    days = np.arange(np.datetime64("2015-01-01"), np.datetime64("2018-01-01"))
    days = days[np.is_busday(days)]
    expected = []
    prev = None
    for d in days:
        y = d.item().year
        if y != prev:
            expected.append(d)
            prev = y
    assert rebalance_dates(days, "annual").tolist() == expected
    assert [str(d) for d in expected] == ["2015-01-01", "2016-01-01", "2017-01-02"]

    months = rebalance_dates(days, "monthly")
    assert len(months) == 36
    assert all(m.item().month == k % 12 + 1 for k, m in enumerate(months))
    quarters = rebalance_dates(days, "quarterly")
    assert [q.item().month for q in quarters[:5]] == [1, 4, 7, 10, 1]


def test_rebalance_dates_trivial():
    days = business_days("2016-03-01", 100)
    assert rebalance_dates(days, "none").tolist() == [days[0]]
    assert rebalance_dates(days, "annual").tolist() == [days[0]]


def test_matches_naive_oracle_with_costs():
    pm = gbm_prices(["A", "B", "C", "D"], n_days=700, mu=[0.2, 0.0, 0.1, -0.05], sigma=0.3, seed=9)
    w = np.array([0.4, 0.1, 0.3, 0.2])
    for freq in FREQUENCIES:
        for bps in (0.0, 25.0):
            res = run_backtest(pm, w, BacktestConfig(rebalance=freq, transaction_cost_bps=bps))
            expected, _ = naive_backtest(pm, w, freq, bps=bps)
            np.testing.assert_allclose(res.curve.values, expected, rtol=1e-12)
            assert len(res.turnover) == len(res.rebalance_dates) == len(res.costs)


def test_initial_value_net_of_cost():
    pm = gbm_prices(["A", "B"], n_days=50, seed=2)
    res = run_backtest(pm, [0.5, 0.5], BacktestConfig(initial_value=100.0, transaction_cost_bps=10))
    assert res.curve.values[0] == pytest.approx(100.0 * (1 - 0.001))
    assert res.costs[0] == pytest.approx(0.1)
    assert res.turnover[0] == pytest.approx(1.0)


def test_ticker_mismatch_and_too_few_rows():
    pm = gbm_prices(["A", "B"], n_days=10, seed=2)
    with pytest.raises(TickerMismatch):
        run_backtest(pm, {"A": 1.0})
    with pytest.raises(TooFewRows):
        run_backtest(PriceMatrix(pm.dates[:1], pm.tickers, pm.prices[:1]), [0.5, 0.5])


def test_weights_validation():
    with pytest.raises(ValueError):
        Weights(("A", "B"), [0.7, 0.7])
    with pytest.raises(ValueError):
        Weights(("A", "B"), [1.1, -0.1])


def test_benchmark():
    pm = gbm_prices(["SPY", "X"], n_days=300, seed=4)
    res = buy_and_hold_benchmark(pm, "SPY")
    np.testing.assert_allclose(res.curve.values, pm.column("SPY") / pm.column("SPY")[0], rtol=1e-12)
    assert len(res.rebalance_dates) == 1
    with pytest.raises(UnknownTicker):
        buy_and_hold_benchmark(pm, "QQQ")


def test_benchmark_constant_price():
    dates = business_days("2020-01-01", 30)
    pm = PriceMatrix(dates, ["FLAT"], np.full((30, 1), 7.0))
    rep = buy_and_hold_benchmark(pm, "FLAT").report
    assert np.all(buy_and_hold_benchmark(pm, "FLAT").curve.values == 1.0)
    assert rep.to_dict() == {"cagr": 0.0, "max_drawdown": 0.0, "sharpe": 0.0, "sortino": 0.0, "mar": 0.0}


def test_batch_rows_bitwise_equal_single():
    pm = gbm_prices(list("ABCDE"), n_days=400, seed=5)
    bt = Backtester(pm, BacktestConfig(rebalance="quarterly", transaction_cost_bps=5))
    rng = np.random.default_rng(0)
    W = rng.dirichlet(np.ones(5), size=9)
    batch = bt.values(W)
    for i, w in enumerate(W):
        assert np.array_equal(batch[i], bt.values(w)[0])
    assert np.array_equal(batch[3:6], bt.values(W[3:6]))


# properties ----------------------------------------------------------------

instances = st.tuples(
    st.integers(2, 5),  # assets
    st.integers(30, 400),  # days
    st.integers(0, 2**32 - 1),  # seed
    st.sampled_from(FREQUENCIES),
)


@settings(max_examples=300, deadline=None)
@given(instances)
def test_zero_cost_value_continuity(inst):
    n, days, seed, freq = inst
    pm = gbm_prices([f"T{i}" for i in range(n)], n_days=days, sigma=0.4, seed=seed)
    w = np.random.default_rng(seed).dirichlet(np.ones(n))
    res = run_backtest(pm, w, BacktestConfig(rebalance=freq))
    _, pre = naive_backtest(pm, w, freq)
    rows = np.searchsorted(pm.dates, res.rebalance_dates)
    np.testing.assert_allclose(res.curve.values[rows][1:], pre[1:], rtol=1e-9)


@settings(max_examples=300, deadline=None)
@given(instances, st.floats(0, 100), st.floats(0, 100))
def test_final_value_monotone_in_cost(inst, c1, c2):
    n, days, seed, freq = inst
    lo, hi = sorted((c1, c2))
    pm = gbm_prices([f"T{i}" for i in range(n)], n_days=days, sigma=0.4, seed=seed)
    w = np.random.default_rng(seed).dirichlet(np.ones(n))
    a = run_backtest(pm, w, BacktestConfig(rebalance=freq, transaction_cost_bps=lo)).curve.values[-1]
    b = run_backtest(pm, w, BacktestConfig(rebalance=freq, transaction_cost_bps=hi)).curve.values[-1]
    assert b <= a * (1 + 1e-12)


@settings(max_examples=300, deadline=None)
@given(instances, st.randoms(use_true_random=False))
def test_column_permutation_invariance(inst, rnd):
    n, days, seed, freq = inst
    tickers = [f"T{i}" for i in range(n)]
    pm = gbm_prices(tickers, n_days=days, sigma=0.4, seed=seed)
    w = dict(zip(tickers, np.random.default_rng(seed).dirichlet(np.ones(n))))
    perm = tickers[:]
    rnd.shuffle(perm)
    a = run_backtest(pm, w, BacktestConfig(rebalance=freq)).curve.values
    b = run_backtest(pm.select(perm), w, BacktestConfig(rebalance=freq)).curve.values
    np.testing.assert_allclose(a, b, rtol=1e-12)
