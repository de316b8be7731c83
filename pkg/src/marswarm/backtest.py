"""Static-weight portfolio backtest with periodic rebalancing.

Holdings are fractional shares. At the first row and at each rebalance date
the portfolio is reset to its target weights at that day's close; between
rebalances the share counts are fixed and the weights drift with prices.

:class:`Backtester` precomputes price relatives once per price matrix so that
many weight vectors can be evaluated cheaply, which is what the optimizer's
fitness function does.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import TickerMismatch, TooFewRows, UnknownTicker
from .marketdata import PriceMatrix, _frozen
from .metrics import EquityCurve, MetricsReport, report

__all__ = [
    "FREQUENCIES",
    "Weights",
    "BacktestConfig",
    "BacktestResult",
    "Backtester",
    "rebalance_indices",
    "rebalance_dates",
    "run_backtest",
    "buy_and_hold_benchmark",
]

FREQUENCIES = ("none", "monthly", "quarterly", "annual")
WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Weights:
    """Long-only portfolio weights summing to one."""

    tickers: tuple
    values: np.ndarray

    def __post_init__(self):
        tickers = tuple(str(t) for t in self.tickers)
        values = np.asarray(self.values, dtype=float).ravel()
        if len(values) != len(tickers):
            raise ValueError("weights and tickers differ in length")
        if len(set(tickers)) != len(tickers):
            raise ValueError("duplicate ticker in weights")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("weights must be finite and non-negative")
        if abs(values.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {values.sum()!r}, not 1")
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "Weights":
        return cls(tuple(mapping), np.array(list(mapping.values()), dtype=float))

    def as_dict(self) -> dict[str, float]:
        return {t: float(w) for t, w in zip(self.tickers, self.values)}

    def aligned(self, tickers: Sequence[str]) -> np.ndarray:
        """Weight vector ordered by ``tickers`` (which must be the same set)."""
        if set(tickers) != set(self.tickers) or len(tickers) != len(self.tickers):
            extra = sorted(set(self.tickers) - set(tickers))
            missing = sorted(set(tickers) - set(self.tickers))
            raise TickerMismatch(
                f"weight tickers do not match prices (extra: {extra}, missing: {missing})"
            )
        lookup = dict(zip(self.tickers, self.values))
        return np.array([lookup[t] for t in tickers])

    def nonzero(self) -> dict[str, float]:
        return {t: float(w) for t, w in zip(self.tickers, self.values) if w > 0}


@dataclass(frozen=True)
class BacktestConfig:
    rebalance: str = "annual"
    initial_value: float = 1.0
    transaction_cost_bps: float = 0.0
    periods_per_year: float = 252

    def __post_init__(self):
        if self.rebalance not in FREQUENCIES:
            raise ValueError(f"rebalance must be one of {FREQUENCIES}, got {self.rebalance!r}")
        if not self.initial_value > 0:
            raise ValueError("initial_value must be positive")
        # cost <= bps/1e4 * 2V, so bps < 5000 keeps the portfolio value positive
        if not 0 <= self.transaction_cost_bps < 5000:
            raise ValueError("transaction_cost_bps must be in [0, 5000)")
        if not self.periods_per_year > 0:
            raise ValueError("periods_per_year must be positive")


@dataclass(frozen=True, eq=False)
class BacktestResult:
    curve: EquityCurve
    report: MetricsReport
    rebalance_dates: np.ndarray
    turnover: np.ndarray
    costs: np.ndarray
    weights: Weights


def rebalance_indices(dates, frequency: str) -> np.ndarray:
    """Row indices of the first trading day of each rebalance period."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    if len(dates) == 0:
        raise TooFewRows("empty date list")
    if frequency not in FREQUENCIES:
        raise ValueError(f"unknown rebalance frequency {frequency!r}")
    if frequency == "none":
        return np.array([0])
    if frequency == "annual":
        key = dates.astype("datetime64[Y]").astype(np.int64)
    else:
        key = dates.astype("datetime64[M]").astype(np.int64)
        if frequency == "quarterly":
            key = key // 3
    return np.concatenate(([0], np.flatnonzero(np.diff(key) != 0) + 1))


def rebalance_dates(dates, frequency: str) -> np.ndarray:
    dates = np.asarray(dates, dtype="datetime64[D]")
    return dates[rebalance_indices(dates, frequency)]


class Backtester:
    """Reusable evaluator for many weight vectors over one price matrix.

    Weight matrices have one portfolio per row; the returned value paths have
    shape ``(n_portfolios, T)``. Asset contributions are accumulated in a fixed
    column order with elementwise operations only, so a portfolio's path does
    not depend on how many other portfolios are evaluated alongside it.
    """

    def __init__(self, prices: PriceMatrix, config: BacktestConfig | None = None):
        if len(prices) < 2:
            raise TooFewRows(f"backtest needs at least 2 rows, got {len(prices)}")
        self.prices = prices
        self.config = config or BacktestConfig()
        p = prices.prices
        self.rows = rebalance_indices(prices.dates, self.config.rebalance)
        seg = np.zeros(len(p), dtype=np.intp)
        seg[self.rows[1:]] = 1
        self.segment = np.cumsum(seg)
        start_rows = self.rows[self.segment]
        # relatives[j, t] = p[t, j] / p[start of t's segment, j]
        self.relatives = np.ascontiguousarray((p / p[start_rows]).T)
        # drift of each asset over a full segment, up to the next rebalance close
        self.segment_relatives = p[self.rows[1:]] / p[self.rows[:-1]]

    @property
    def n_assets(self) -> int:
        return self.relatives.shape[0]

    def _combine(self, W: np.ndarray, rel: np.ndarray) -> np.ndarray:
        out = np.zeros((W.shape[0], rel.shape[1]))
        tmp = np.empty_like(out)
        for j in range(W.shape[1]):
            np.multiply(W[:, j : j + 1], rel[j][None, :], out=tmp)
            out += tmp
        return out

    def simulate(self, W) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Run the backtest for each row of ``W``.

        Returns
        -------
        values : ndarray, shape (P, T)
            Post-trade portfolio value on each date.
        turnover : ndarray, shape (P, K)
            Traded value over pre-trade portfolio value at each of the K
            rebalances (the first is the initial purchase).
        costs : ndarray, shape (P, K)
            Transaction cost deducted at each rebalance.
        """
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if W.shape[1] != self.n_assets:
            raise TickerMismatch(f"expected {self.n_assets} weights, got {W.shape[1]}")
        cfg = self.config
        rate = cfg.transaction_cost_bps / 10_000.0
        growth = self._combine(W, self.relatives)
        K = len(self.rows)
        P = W.shape[0]
        turnover = np.empty((P, K))
        costs = np.empty((P, K))
        starts = np.empty((P, K))

        v0 = cfg.initial_value
        traded = v0 * W.sum(axis=1)
        turnover[:, 0] = traded / v0
        costs[:, 0] = rate * traded
        starts[:, 0] = v0 - costs[:, 0]
        if K > 1:
            seg_growth = self._combine(W, np.ascontiguousarray(self.segment_relatives.T))
            for k in range(1, K):
                pre = starts[:, k - 1] * seg_growth[:, k - 1]
                current = starts[:, k - 1, None] * W * self.segment_relatives[k - 1]
                traded = np.abs(pre[:, None] * W - current).sum(axis=1)
                turnover[:, k] = traded / pre
                costs[:, k] = rate * traded
                starts[:, k] = pre - costs[:, k]
        values = starts[:, self.segment] * growth
        return values, turnover, costs

    def values(self, W) -> np.ndarray:
        return self.simulate(W)[0]


def _weights_for(prices: PriceMatrix, weights) -> Weights:
    if isinstance(weights, Weights):
        return weights
    if isinstance(weights, Mapping):
        return Weights.from_mapping(weights)
    return Weights(prices.tickers, weights)


def run_backtest(prices: PriceMatrix, weights, config: BacktestConfig | None = None) -> BacktestResult:
    """Backtest a static-weight portfolio.

    ``weights`` may be a :class:`Weights`, a ``{ticker: weight}`` mapping, or
    an array aligned with ``prices.tickers``. Its tickers must be exactly the
    price matrix's tickers.
    """
    config = config or BacktestConfig()
    w = _weights_for(prices, weights)
    vec = w.aligned(prices.tickers)
    bt = Backtester(prices, config)
    values, turnover, costs = bt.simulate(vec[None, :])
    curve = EquityCurve(prices.dates, values[0])
    return BacktestResult(
        curve=curve,
        report=report(curve, config.periods_per_year),
        rebalance_dates=prices.dates[bt.rows],
        turnover=turnover[0],
        costs=costs[0],
        weights=Weights(prices.tickers, vec),
    )


def buy_and_hold_benchmark(
    prices: PriceMatrix, ticker: str, config: BacktestConfig | None = None
) -> BacktestResult:
    """Hold 100% of ``ticker`` from the first row with no rebalancing."""
    if ticker not in prices.tickers:
        raise UnknownTicker(f"benchmark ticker {ticker!r} not in price data")
    base = config or BacktestConfig()
    cfg = BacktestConfig(
        rebalance="none",
        initial_value=base.initial_value,
        transaction_cost_bps=base.transaction_cost_bps,
        periods_per_year=base.periods_per_year,
    )
    return run_backtest(prices.select([ticker]), {ticker: 1.0}, cfg)
