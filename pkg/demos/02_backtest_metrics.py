# %% [markdown]
# # Backtesting a fixed-weight portfolio
#
# Three synthetic assets, one benchmark. We hold fixed target weights, reset
# them once a year, and compare against buying the benchmark and holding it.

# %%
import numpy as np

from marswarm import BacktestConfig, buy_and_hold_benchmark, max_drawdown, run_backtest
from marswarm.reporting import comparison_table
from marswarm.synthetic import gbm_prices

prices = gbm_prices(
    ["SPY", "GROWTH", "BOND", "GOLD"],
    n_days=2520,
    mu=[0.08, 0.18, 0.03, 0.05],
    sigma=[0.17, 0.35, 0.06, 0.15],
    seed=11,
)
print(prices.shape, prices.dates[0], prices.dates[-1])

# %%
weights = {"GROWTH": 0.4, "BOND": 0.35, "GOLD": 0.25}
cfg = BacktestConfig(rebalance="annual", transaction_cost_bps=5)
portfolio = run_backtest(prices.select(list(weights)), weights, cfg)
bench = buy_and_hold_benchmark(prices, "SPY")

print(len(portfolio.rebalance_dates), "rebalances")
print("turnover", np.round(portfolio.turnover, 4))

# %% [markdown]
# The report is the same table the CLI prints: percentages and ratios to two
# decimals. Everything machine-readable keeps full precision.

# %%
print(
    comparison_table(
        {"Portfolio": portfolio.report, "SPY": bench.report},
        {"Portfolio": weights, "SPY": {"SPY": 1.0}},
        [("Rebalancing frequency", cfg.rebalance)],
    )
)

# %% [markdown]
# Rebalancing changes the path, not the arithmetic. A few frequencies side by
# side, at zero cost:

# %%
for freq in ("none", "annual", "quarterly", "monthly"):
    r = run_backtest(prices.select(list(weights)), weights, BacktestConfig(rebalance=freq)).report
    print(f"{freq:<10} CAGR {r.cagr:7.2%}  MDD {r.max_drawdown:7.2%}  MAR {r.mar:5.2f}")

# %%
# where the worst drawdown sits
v = portfolio.curve.values
peak = np.maximum.accumulate(v)
trough = int(np.argmax((peak - v) / peak))
top = int(np.argmax(v[: trough + 1]))
print("peak", portfolio.curve.dates[top], "trough", portfolio.curve.dates[trough])
print("depth", round(max_drawdown(portfolio.curve), 4))
