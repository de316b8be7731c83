# %% [markdown]
# # How much leverage survives the worst drawdown
#
# A margin account starts with its own capital plus a loan. The position moves
# with the unlevered portfolio while the loan stays put, so the equity share
# shrinks in a drawdown. A call fires when it falls below the maintenance
# ratio.

# %%
import numpy as np

from marswarm import BacktestConfig, MarginConfig, max_safe_leverage, run_backtest, simulate_margin
from marswarm.margin import call_threshold
from marswarm.synthetic import gbm_prices

prices = gbm_prices(["X", "Y"], n_days=1260, mu=[0.15, 0.06], sigma=[0.3, 0.1], seed=21)
base = run_backtest(prices, [0.6, 0.4], BacktestConfig(rebalance="annual"))
mdd = base.report.max_drawdown
print(f"unlevered MDD {mdd:.2%}")

# %% [markdown]
# With zero interest and the drawdown measured from the start of the account,
# the largest leverage that never triggers a call has a closed form.

# %%
m = 0.25
safe = max_safe_leverage(mdd, m)
print(f"max safe leverage at {m:.0%} maintenance: {safe:.3f}")
print(f"a call needs the portfolio below {call_threshold(safe, m):.4f} of its start value")

# %%
for lev in (1.0, 1.5, safe, 1.25 * safe, 3.0):
    if m >= 1 / lev:
        print(f"x{lev:.2f}: invalid, would start in breach")
        continue
    levered, events = simulate_margin(base.curve, MarginConfig(lev, m))
    calls = [e for e in events if e.action == "call_issued"]
    first = calls[0].date if calls else "-"
    print(f"x{lev:.2f}: final {levered.values[-1]:8.3f}  calls {len(calls)}  first {first}")

# %% [markdown]
# The bound is tight only when the drawdown starts at the first observation.
# Later peaks have already paid down the effective loan share.

# %%
v = base.curve.values
peak = np.maximum.accumulate(v)
trough = int(np.argmax((peak - v) / peak))
top = int(np.argmax(v[: trough + 1]))
tail = type(base.curve)(base.curve.dates[top:], v[top:])
_, at_bound = simulate_margin(tail, MarginConfig(safe, m))
_, above = simulate_margin(tail, MarginConfig(1.01 * safe, m))
print(len(at_bound), "events at the bound,", len(above), "at 1.01x")

# %% [markdown]
# Liquidating on a call sells just enough to restore the opening equity
# ratio. Loan interest is charged daily on an act/365.25 basis.

# %%
cfg = MarginConfig(1.25 * safe, m, annual_loan_rate=0.05, call_policy="liquidate_to_initial")
levered, events = simulate_margin(base.curve, cfg)
for e in events[:6]:
    print(e.date, f"{e.action:<12} equity ratio {e.equity_ratio:.4f}")
