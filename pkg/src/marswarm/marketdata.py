"""Price and metadata ingestion, calendar alignment and return series.

Dates are held as ``numpy.datetime64[D]`` arrays throughout the package.
Input prices are assumed to be adjusted closes (splits and dividends already
folded in); no corporate-action handling is done here.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateRow,
    DuplicateTicker,
    EmptyWindow,
    MissingColumn,
    NonPositivePrice,
    TooFewRows,
    UnparsableDate,
    UnparsableValue,
)

__all__ = [
    "PriceMatrix",
    "AssetMeta",
    "ReturnSeries",
    "to_date",
    "to_dates",
    "load_prices",
    "load_meta",
    "to_returns",
    "slice_period",
]


def to_date(value) -> np.datetime64:
    """Coerce an ISO string, ``datetime.date`` or ``datetime64`` to day precision."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    if isinstance(value, dt.datetime):
        value = value.date()
    if isinstance(value, dt.date):
        return np.datetime64(value, "D")
    if isinstance(value, str):
        return np.datetime64(dt.date.fromisoformat(value.strip()), "D")
    raise TypeError(f"cannot interpret {value!r} as a date")


def to_dates(values: Iterable) -> np.ndarray:
    return np.array([to_date(v) for v in values], dtype="datetime64[D]")


def _as_date_array(values) -> np.ndarray:
    a = np.asarray(values)
    if np.issubdtype(a.dtype, np.datetime64):
        return a.astype("datetime64[D]")
    return to_dates(values)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PriceMatrix:
    """Aligned daily close prices.

    Parameters
    ----------
    dates : array-like of dates, shape (T,)
        Strictly increasing trading dates.
    tickers : sequence of str, length N
    prices : ndarray, shape (T, N)
        Positive close prices; row ``t`` is ``dates[t]``.
    """

    dates: np.ndarray
    tickers: tuple
    prices: np.ndarray

    def __post_init__(self):
        dates = _as_date_array(self.dates)
        tickers = tuple(str(t) for t in self.tickers)
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(dates), len(tickers)):
            raise ValueError(
                f"prices shape {prices.shape} does not match "
                f"{len(dates)} dates x {len(tickers)} tickers"
            )
        if len(set(tickers)) != len(tickers):
            raise DuplicateTicker("duplicate ticker in price matrix")
        if len(dates) > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            bad = np.argwhere(~(prices > 0) | ~np.isfinite(prices))[0]
            raise NonPositivePrice(
                f"non-positive price {prices[bad[0], bad[1]]!r} for "
                f"{tickers[bad[1]]} on {dates[bad[0]]}"
            )
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "prices", _frozen(prices))

    @property
    def shape(self) -> tuple[int, int]:
        return self.prices.shape

    def __len__(self) -> int:
        return len(self.dates)

    def column(self, ticker: str) -> np.ndarray:
        return self.prices[:, self.tickers.index(ticker)]

    def select(self, tickers: Sequence[str]) -> "PriceMatrix":
        """Return a matrix restricted to (and ordered by) ``tickers``."""
        missing = [t for t in tickers if t not in self.tickers]
        if missing:
            raise MissingColumn(f"no prices for ticker(s): {', '.join(missing)}")
        idx = [self.tickers.index(t) for t in tickers]
        return PriceMatrix(self.dates, tuple(tickers), self.prices[:, idx])

    def equals(self, other: "PriceMatrix") -> bool:
        return (
            self.tickers == other.tickers
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.prices, other.prices)
        )


@dataclass(frozen=True)
class AssetMeta:
    ticker: str
    market_cap: float
    first_trade_date: dt.date
    sector: str | None = None
    excluded: bool = False

    def __post_init__(self):
        if not self.ticker:
            raise ValueError("ticker must be non-empty")
        if not self.market_cap >= 0:
            raise ValueError(f"{self.ticker}: market_cap must be non-negative")


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Simple period returns ``p[t] / p[t-1] - 1``; ``dates[i]`` is the end date."""

    dates: np.ndarray
    tickers: tuple
    returns: np.ndarray


def _parse_date(text: str, where: str) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError:
        raise UnparsableDate(f"{where}: cannot parse date {text!r}") from None


def _parse_price(text: str, ticker: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise UnparsableValue(f"{where}: cannot parse price {text!r} for {ticker}") from None
    if not (value > 0) or not np.isfinite(value):
        raise NonPositivePrice(f"{where}: non-positive price {text!r} for {ticker}")
    return value


def _read_wide(reader, path) -> dict[str, dict[np.datetime64, float]]:
    header = [h.strip() for h in reader.fieldnames]
    if header[0] != "date":
        raise MissingColumn(f"{path}: first column must be 'date'")
    series: dict[str, dict] = {t: {} for t in header[1:]}
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        where = f"{path}:{lineno}"
        d = _parse_date(row["date"] or "", where)
        if d in seen:
            raise DuplicateRow(f"{where}: duplicate date {d}")
        seen.add(d)
        for t in header[1:]:
            cell = (row.get(t) or "").strip()
            if cell:
                series[t][d] = _parse_price(cell, t, where)
    return series


def _read_long(reader, path) -> dict[str, dict[np.datetime64, float]]:
    header = [h.strip() for h in reader.fieldnames]
    for col in ("date", "ticker", "close"):
        if col not in header:
            raise MissingColumn(f"{path}: missing column {col!r}")
    series: dict[str, dict] = {}
    for lineno, row in enumerate(reader, start=2):
        where = f"{path}:{lineno}"
        d = _parse_date(row["date"] or "", where)
        t = (row["ticker"] or "").strip()
        if not t:
            raise MissingColumn(f"{where}: empty ticker")
        per = series.setdefault(t, {})
        if d in per:
            raise DuplicateRow(f"{where}: duplicate row for {t} on {d}")
        per[d] = _parse_price(row["close"] or "", t, where)
    return series


def load_prices(path, format: str = "wide", tickers: Sequence[str] | None = None) -> PriceMatrix:
    """Read a price CSV and align it on the dates shared by every ticker.

    Parameters
    ----------
    path : path-like
        CSV file. ``wide`` layout is ``date,T1,T2,...`` with empty cells for
        missing prices; ``long`` layout is ``date,ticker,close``.
    format : {"wide", "long"}
    tickers : sequence of str, optional
        Tickers to keep, in output column order. Defaults to every ticker in
        the file (file order for wide, sorted for long).

    Rows where any kept ticker lacks a price are dropped (inner join), never
    forward-filled.
    """
    path = Path(path)
    if format not in ("wide", "long"):
        raise ValueError(f"unknown price format {format!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise MissingColumn(f"{path}: missing header row")
        reader.fieldnames = [h.strip() for h in reader.fieldnames]
        series = _read_wide(reader, path) if format == "wide" else _read_long(reader, path)

    if tickers is None:
        tickers = list(series) if format == "wide" else sorted(series)
    else:
        tickers = list(tickers)
        missing = [t for t in tickers if t not in series]
        if missing:
            raise MissingColumn(f"{path}: no prices for ticker(s): {', '.join(missing)}")

    if not tickers:
        raise MissingColumn(f"{path}: no ticker columns")
    common = set(series[tickers[0]])
    for t in tickers[1:]:
        common &= set(series[t])
    dates = np.array(sorted(common), dtype="datetime64[D]")
    prices = np.array([[series[t][d] for t in tickers] for d in dates], dtype=float)
    return PriceMatrix(dates, tuple(tickers), prices.reshape(len(dates), len(tickers)))


_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f", ""}


def load_meta(path) -> list[AssetMeta]:
    """Read the asset metadata CSV.

    Required columns are ``ticker``, ``market_cap`` and ``first_trade_date``;
    ``sector`` and ``excluded`` are optional.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise MissingColumn(f"{path}: missing header row")
        reader.fieldnames = [h.strip() for h in reader.fieldnames]
        for col in ("ticker", "market_cap", "first_trade_date"):
            if col not in reader.fieldnames:
                raise MissingColumn(f"{path}: missing column {col!r}")
        out: list[AssetMeta] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            ticker = (row["ticker"] or "").strip()
            if not ticker:
                raise UnparsableValue(f"{where}: empty ticker")
            if ticker in seen:
                raise DuplicateTicker(f"{where}: duplicate ticker {ticker}")
            seen.add(ticker)
            try:
                cap = float(row["market_cap"])
            except (TypeError, ValueError):
                raise UnparsableValue(f"{where}: bad market_cap {row['market_cap']!r}") from None
            if not cap >= 0:
                raise UnparsableValue(f"{where}: negative market_cap for {ticker}")
            first = _parse_date(row["first_trade_date"] or "", where).item()
            sector = (row.get("sector") or "").strip() or None
            flag = (row.get("excluded") or "").strip().lower()
            if flag in _TRUE:
                excluded = True
            elif flag in _FALSE:
                excluded = False
            else:
                raise UnparsableValue(f"{where}: excluded must be true/false, got {flag!r}")
            out.append(AssetMeta(ticker, cap, first, sector, excluded))
    return out


def to_returns(prices: PriceMatrix) -> ReturnSeries:
    if len(prices) < 2:
        raise TooFewRows(f"need at least 2 rows for returns, got {len(prices)}")
    p = prices.prices
    return ReturnSeries(prices.dates[1:], prices.tickers, p[1:] / p[:-1] - 1.0)


def slice_period(prices: PriceMatrix, start, end) -> PriceMatrix:
    """Rows with ``start <= date <= end``.

    Non-trading endpoints snap inward to the first/last contained trading day.
    """
    start, end = to_date(start), to_date(end)
    if not start < end:
        raise EmptyWindow(f"window start {start} is not before end {end}")
    mask = (prices.dates >= start) & (prices.dates <= end)
    if not mask.any():
        raise EmptyWindow(f"no trading dates between {start} and {end}")
    return PriceMatrix(prices.dates[mask], prices.tickers, prices.prices[mask])
