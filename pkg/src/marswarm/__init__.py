"""Portfolio weight search by particle swarm optimization, maximizing the MAR
ratio (CAGR / maximum drawdown), with universe screening, rebalanced
backtests and margin-account simulation."""

from .backtest import (
    BacktestConfig,
    BacktestResult,
    Backtester,
    Weights,
    buy_and_hold_benchmark,
    rebalance_dates,
    run_backtest,
)
from .margin import MarginConfig, MarginEvent, max_safe_leverage, simulate_margin
from .marketdata import AssetMeta, PriceMatrix, ReturnSeries, load_meta, load_prices, slice_period, to_returns
from .metrics import EquityCurve, MetricsReport, cagr, mar_ratio, max_drawdown, report, sharpe, sortino
from .pso import (
    Objective,
    PsoParams,
    SwarmState,
    init_swarm,
    make_objective,
    optimize,
    repair_to_feasible,
    run_swarm,
    sparsify,
    step,
)
from .universe import ScreeningRule, WeightBounds, feasibility_check, screen

__version__ = "0.1.0"
