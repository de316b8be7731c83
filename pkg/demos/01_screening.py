# %% [markdown]
# # Screening a universe before optimizing
#
# The optimizer only sees assets that survive the screen. Here we build a
# synthetic universe of 40 companies, keep the 10 largest by market cap that
# have traded for at least 10 years, and force one name in.

# %%
import numpy as np

from marswarm import ScreeningRule, WeightBounds, feasibility_check, screen
from marswarm.synthetic import random_meta
from marswarm.universe import age_years

as_of = "2015-01-01"
meta = random_meta(40, as_of=as_of, seed=3)
print(len(meta), "candidates")

# %% [markdown]
# A rule is a frozen value object; contradictory rules fail on construction.

# %%
rule = ScreeningRule(top_n_by_cap=10, min_history_years=10, as_of=as_of)
universe = screen(meta, rule)

by_ticker = {m.ticker: m for m in meta}
for t in universe:
    m = by_ticker[t]
    print(f"{t}  cap={m.market_cap:.3g}  age={age_years(m.first_trade_date, as_of):5.1f}y")

# %%
# pin the youngest eligible name and drop the largest one
old_enough = [m.ticker for m in meta if age_years(m.first_trade_date, as_of) >= 10]
pinned = old_enough[-1]
rule = ScreeningRule(
    top_n_by_cap=10,
    min_history_years=10,
    as_of=as_of,
    required_tickers=frozenset([pinned]),
    excluded_tickers=frozenset([universe[0]]),
)
universe = screen(meta, rule)
print(universe)
assert pinned in universe and len(universe) == 10

# %% [markdown]
# Weight bounds are checked against the screened list before any search runs.
# Ten assets capped at 5% each cannot add up to one.

# %%
tight = WeightBounds.from_mapping(universe, {}, default=(0.0, 0.05))
print(feasibility_check(tight).message)

loose = WeightBounds.from_mapping(universe, {pinned: (0.05, 0.2)}, default=(0.0, 0.3))
report = feasibility_check(loose)
print(report.ok, np.round([report.sum_min, report.sum_max], 3))
