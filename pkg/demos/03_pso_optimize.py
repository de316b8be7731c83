# %% [markdown]
# # Searching for high-MAR weights with a particle swarm
#
# Fitness is the MAR ratio of an in-sample backtest. Every particle position
# is a long-only weight vector; positions that leave the simplex are repaired
# back onto it before they are scored.

# %%
import numpy as np

from marswarm import BacktestConfig, PsoParams, WeightBounds, make_objective, optimize, sparsify
from marswarm.synthetic import gbm_prices

tickers = ["A", "B", "C", "D", "E", "F"]
prices = gbm_prices(
    tickers,
    n_days=1260,
    mu=[0.25, 0.12, 0.05, 0.15, 0.02, 0.09],
    sigma=[0.45, 0.25, 0.08, 0.3, 0.05, 0.2],
    seed=5,
)
cfg = BacktestConfig(rebalance="annual")

# %%
result = optimize(prices, "mar", backtest_config=cfg, params=PsoParams(seed=1))
print(f"MAR {result.fitness:.4f} after {result.iterations} iterations")
for t, w in result.weights.nonzero().items():
    print(f"  {t}: {w:.3f}")

# %% [markdown]
# The history is the global best after each step. It never goes down; the
# run stops after 50 steps with no gain above 1e-10.

# %%
h = np.array(result.history)
assert np.all(np.diff(h) >= 0)
print("best at init", round(h[0], 4), "final", round(h[-1], 4))
print("last improvement at step", int(np.flatnonzero(np.diff(h) > 1e-10).max(initial=-1) + 1))

# %% [markdown]
# Caps per asset. Capping the winner forces the swarm to spread weight.

# %%
winner = max(result.weights.nonzero().items(), key=lambda kv: kv[1])[0]
bounds = WeightBounds.from_mapping(tickers, {winner: (0.0, 0.3)}, default=(0.0, 0.6))
capped = optimize(prices, "mar", bounds, cfg, PsoParams(seed=1))
print({t: round(w, 3) for t, w in capped.weights.nonzero().items()}, round(capped.fitness, 4))

# %% [markdown]
# Cardinality is a post-processing step: keep the largest weights and
# renormalize, then rescore.

# %%
objective = make_objective("mar", prices, cfg)
for k in (1, 2, 3):
    w = sparsify(result.weights, k)
    print(k, {t: round(x, 3) for t, x in w.nonzero().items()}, round(objective(w.values), 4))

# %%
# same seed, any number of workers: identical answer
par = optimize(prices, "mar", backtest_config=cfg, params=PsoParams(seed=1, n_jobs=4))
print(np.array_equal(par.weights.values, result.weights.values))
