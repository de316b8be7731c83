"""Performance metrics computed from an equity curve.

Conventions: simple per-period returns, zero risk-free rate, sample standard
deviation for Sharpe, full-sample downside deviation (target 0) for Sortino,
calendar-day CAGR exponent ``365.25 / days``. Drawdown uses closing values only.

The array-level helpers (``drawdowns``, ``max_drawdown_values``, ...) take time
along the last axis, so a stack of curves with shape ``(n_curves, T)`` is
processed row by row with the same floating-point result as a single curve.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import TooFewPoints
from .marketdata import _as_date_array, _frozen

__all__ = [
    "MDD_FLOOR",
    "STD_FLOOR",
    "EquityCurve",
    "MetricsReport",
    "max_drawdown",
    "cagr",
    "sharpe",
    "sortino",
    "mar_ratio",
    "report",
    "drawdowns",
    "simple_returns",
]

MDD_FLOOR = 1e-9
STD_FLOOR = 1e-12
DAYS_PER_YEAR = 365.25


@dataclass(frozen=True, eq=False)
class EquityCurve:
    """Portfolio value over time (positive values, strictly increasing dates)."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = _as_date_array(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) != len(dates):
            raise ValueError("dates and values must be 1-D and of equal length")
        if not np.all(values > 0) or not np.all(np.isfinite(values)):
            raise ValueError("equity curve values must be positive and finite")
        if len(dates) > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise ValueError("equity curve dates must be strictly increasing")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def days(self) -> float:
        return float((self.dates[-1] - self.dates[0]) / np.timedelta64(1, "D"))

    def scaled(self, factor: float) -> "EquityCurve":
        return EquityCurve(self.dates, self.values * factor)


@dataclass(frozen=True)
class MetricsReport:
    cagr: float
    max_drawdown: float
    sharpe: float
    sortino: float
    mar: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _values(curve) -> np.ndarray:
    v = curve.values if isinstance(curve, EquityCurve) else np.asarray(curve, dtype=float)
    if v.shape[-1] < 2:
        raise TooFewPoints(f"need at least 2 points, got {v.shape[-1]}")
    return v


def drawdowns(values: np.ndarray) -> np.ndarray:
    """Fractional decline from the running peak, ``(peak_t - v_t) / peak_t``."""
    values = np.asarray(values, dtype=float)
    peak = np.maximum.accumulate(values, axis=-1)
    return (peak - values) / peak


def simple_returns(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[..., 1:] / values[..., :-1] - 1.0


def max_drawdown(curve) -> float | np.ndarray:
    """Largest peak-to-trough decline as a fraction in ``[0, 1)``.

    Accepts an :class:`EquityCurve` or an array of values (time on the last axis).
    """
    return drawdowns(_values(curve)).max(axis=-1)


def _cagr(values: np.ndarray, days: float):
    if not days > 0:
        raise TooFewPoints("CAGR needs a positive elapsed time")
    ratio = values[..., -1] / values[..., 0]
    return ratio ** (DAYS_PER_YEAR / days) - 1.0


def cagr(curve, days: float | None = None) -> float | np.ndarray:
    """Compound annual growth rate over the calendar span of the curve.

    For a raw value array the elapsed calendar ``days`` must be given.
    """
    values = _values(curve)
    if days is None:
        if not isinstance(curve, EquityCurve):
            raise TypeError("days is required when passing raw values")
        days = curve.days
    return _cagr(values, days)


def _returns_array(returns) -> np.ndarray:
    r = np.asarray(returns, dtype=float)
    if r.shape[-1] < 2:
        raise TooFewPoints(f"need at least 2 returns, got {r.shape[-1]}")
    return r


def sharpe(returns, periods_per_year: float = 252) -> float | np.ndarray:
    r = _returns_array(returns)
    sd = np.maximum(r.std(axis=-1, ddof=1), STD_FLOOR)
    return r.mean(axis=-1) / sd * np.sqrt(periods_per_year)


def sortino(returns, periods_per_year: float = 252) -> float | np.ndarray:
    r = _returns_array(returns)
    downside = np.sqrt(np.mean(np.minimum(r, 0.0) ** 2, axis=-1))
    return r.mean(axis=-1) / np.maximum(downside, STD_FLOOR) * np.sqrt(periods_per_year)


def mar_ratio(cagr, mdd):
    """CAGR divided by maximum drawdown, with the drawdown floored at 1e-9."""
    return cagr / np.maximum(mdd, MDD_FLOOR)


def report(curve: EquityCurve, periods_per_year: float = 252) -> MetricsReport:
    values = _values(curve)
    g = float(cagr(curve))
    mdd = float(max_drawdown(values))
    r = simple_returns(values)
    s = float(sharpe(r, periods_per_year))
    so = float(sortino(r, periods_per_year))
    return MetricsReport(cagr=g, max_drawdown=mdd, sharpe=s, sortino=so, mar=float(mar_ratio(g, mdd)))
