"""Write a small synthetic project (prices, metadata, config) for trying the CLI.

    python demos/make_sample_project.py sample
    marswarm filter sample/run.ini
    marswarm optimize sample/run.ini --jobs 4
    marswarm report sample/run.ini
"""

import sys
from pathlib import Path

import numpy as np

from marswarm.synthetic import gbm_prices, random_meta

CONFIG = """\
[paths]
prices = prices.csv
metadata = meta.csv
outdir = out

[period]
start = 2015-01-01
end = 2024-12-31

[run]
objective = mar
benchmark = SPY

[screening]
top_n_by_cap = 8
min_history_years = 10

[weight_bounds]
default = 0, 1

[backtest]
rebalance = annual
transaction_cost_bps = 0

[pso]
n_particles = 64
max_iters = 500
seed = 42

[margin]
leverage = 1.5
maintenance_ratio = 0.25
annual_loan_rate = 0.0
call_policy = record_only
"""


def main(root):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    meta = random_meta(20, as_of="2015-01-01", seed=7)
    tickers = ["SPY"] + [m.ticker for m in meta]
    rng = np.random.default_rng(7)
    mu = np.r_[0.08, rng.uniform(-0.05, 0.3, len(meta))]
    sigma = np.r_[0.17, rng.uniform(0.1, 0.5, len(meta))]
    prices = gbm_prices(tickers, n_days=2610, mu=mu, sigma=sigma, start="2015-01-01", seed=7)

    lines = ["date," + ",".join(tickers)]
    for d, row in zip(prices.dates, prices.prices):
        lines.append(f"{d}," + ",".join(f"{x:.6f}" for x in row))
    (root / "prices.csv").write_text("\n".join(lines) + "\n")

    rows = ["ticker,market_cap,first_trade_date"]
    rows += [f"{m.ticker},{m.market_cap:.0f},{m.first_trade_date}" for m in meta]
    (root / "meta.csv").write_text("\n".join(rows) + "\n")
    (root / "run.ini").write_text(CONFIG)
    print(f"wrote {root}/prices.csv, meta.csv, run.ini")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "sample")
