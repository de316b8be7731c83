"""Synthetic market data for demos and tests."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .marketdata import AssetMeta, PriceMatrix, to_date


def business_days(start, n: int) -> np.ndarray:
    """``n`` consecutive weekdays starting on or after ``start``."""
    first = np.busday_offset(to_date(start), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward").astype("datetime64[D]")


def gbm_prices(
    tickers: Sequence[str],
    n_days: int = 756,
    mu=0.08,
    sigma=0.2,
    start="2015-01-02",
    seed: int | None = 0,
    initial=100.0,
) -> PriceMatrix:
    """Geometric Brownian motion closes on a weekday calendar.

    ``mu`` and ``sigma`` are annualized and may be scalars or per-ticker arrays.
    """
    rng = np.random.default_rng(seed)
    k = len(tickers)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (k,))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (k,))
    dt = 1.0 / 252
    shocks = rng.standard_normal((n_days - 1, k))
    log_steps = (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * shocks
    paths = np.vstack([np.zeros(k), np.cumsum(log_steps, axis=0)])
    return PriceMatrix(business_days(start, n_days), tuple(tickers), initial * np.exp(paths))


def random_meta(n: int, as_of="2015-01-01", seed: int | None = 0) -> list[AssetMeta]:
    """``n`` assets named ``A000``... with log-normal caps and listing dates up to 30 years back."""
    rng = np.random.default_rng(seed)
    caps = np.round(np.exp(rng.normal(24, 1.5, n)), -3)
    ages = rng.integers(100, 30 * 365, n)
    as_of = to_date(as_of)
    return [
        AssetMeta(f"A{i:03d}", float(caps[i]), (as_of - np.timedelta64(int(ages[i]), "D")).item())
        for i in range(n)
    ]
