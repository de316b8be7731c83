"""Pre-assignment constraints: universe screening and per-asset weight bounds.

Sector caps and liquidity reserves are natural extensions of
:class:`ScreeningRule` and :class:`WeightBounds` but are not implemented; the
screening here covers capitalization rank, minimum listing age, exclusions and
pinned (required) tickers.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InfeasibleBounds, InfeasibleRule
from .marketdata import AssetMeta, to_date

__all__ = [
    "DAYS_PER_YEAR",
    "ScreeningRule",
    "WeightBounds",
    "FeasibilityReport",
    "age_years",
    "screen",
    "feasibility_check",
]

DAYS_PER_YEAR = 365.25
_SUM_TOL = 1e-12


def age_years(first_trade_date, as_of) -> float:
    """Listing age in years, as exact day count / 365.25."""
    days = (to_date(as_of) - to_date(first_trade_date)) / np.timedelta64(1, "D")
    return float(days) / DAYS_PER_YEAR


@dataclass(frozen=True)
class ScreeningRule:
    """Filters applied to the candidate universe before optimization.

    ``required_tickers`` must survive screening and count towards
    ``top_n_by_cap``. A ticker cannot be both required and excluded.
    """

    top_n_by_cap: int | None = None
    min_history_years: float | None = None
    excluded_tickers: frozenset = field(default_factory=frozenset)
    required_tickers: frozenset = field(default_factory=frozenset)
    as_of: dt.date | None = None

    def __post_init__(self):
        object.__setattr__(self, "excluded_tickers", frozenset(self.excluded_tickers))
        object.__setattr__(self, "required_tickers", frozenset(self.required_tickers))
        if self.as_of is not None and not isinstance(self.as_of, dt.date):
            object.__setattr__(self, "as_of", to_date(self.as_of).item())
        if self.top_n_by_cap is not None and self.top_n_by_cap < 1:
            raise InfeasibleRule("top_n_by_cap must be a positive integer")
        if self.min_history_years is not None:
            if self.min_history_years < 0:
                raise InfeasibleRule("min_history_years must be non-negative")
            if self.as_of is None:
                raise InfeasibleRule("min_history_years requires an as_of date")
        clash = self.required_tickers & self.excluded_tickers
        if clash:
            raise InfeasibleRule(
                f"ticker(s) both required and excluded: {', '.join(sorted(clash))}"
            )
        if self.top_n_by_cap is not None and self.top_n_by_cap < len(self.required_tickers):
            raise InfeasibleRule(
                f"top_n_by_cap={self.top_n_by_cap} is smaller than the "
                f"{len(self.required_tickers)} required tickers"
            )


def _cap_order(meta: Sequence[AssetMeta]) -> list[AssetMeta]:
    return sorted(meta, key=lambda m: (-m.market_cap, m.ticker))


def screen(meta: Sequence[AssetMeta], rule: ScreeningRule) -> list[str]:
    """Apply ``rule`` and return surviving tickers, largest capitalization first.

    Ties in market cap are broken by ticker in lexicographic order.
    """
    by_ticker = {m.ticker: m for m in meta}
    missing = rule.required_tickers - set(by_ticker)
    if missing:
        raise InfeasibleRule(f"required ticker(s) not in metadata: {', '.join(sorted(missing))}")

    def reason(m: AssetMeta) -> str | None:
        if m.excluded or m.ticker in rule.excluded_tickers:
            return "excluded"
        if rule.min_history_years is not None:
            age = age_years(m.first_trade_date, rule.as_of)
            if age < rule.min_history_years:
                return f"only {age:.2f} years of history"
        return None

    survivors = []
    for m in meta:
        why = reason(m)
        if why is None:
            survivors.append(m)
        elif m.ticker in rule.required_tickers:
            raise InfeasibleRule(f"required ticker {m.ticker} fails screening: {why}")

    ranked = _cap_order(survivors)
    if rule.top_n_by_cap is not None:
        pinned = [m for m in ranked if m.ticker in rule.required_tickers]
        free = [m for m in ranked if m.ticker not in rule.required_tickers]
        ranked = _cap_order(pinned + free[: rule.top_n_by_cap - len(pinned)])
    return [m.ticker for m in ranked]


class WeightBounds:
    """Per-asset ``[min_weight, max_weight]`` limits.

    Parameters
    ----------
    lower, upper : array-like, shape (n,)
        Bounds in [0, 1] with ``lower <= upper``.
    tickers : sequence of str, optional
        Labels for the positions; needed for :meth:`restrict`.
    """

    def __init__(self, lower, upper, tickers: Sequence[str] | None = None):
        lower = np.array(lower, dtype=float).ravel()
        upper = np.array(upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise InfeasibleBounds("lower and upper bounds differ in length")
        if tickers is not None:
            tickers = tuple(tickers)
            if len(tickers) != len(lower):
                raise InfeasibleBounds("bounds and tickers differ in length")
        if np.any(lower < 0) or np.any(upper > 1) or np.any(lower > upper):
            i = int(np.argmax((lower < 0) | (upper > 1) | (lower > upper)))
            name = tickers[i] if tickers else f"asset {i}"
            raise InfeasibleBounds(
                f"{name}: need 0 <= min <= max <= 1, got ({lower[i]}, {upper[i]})"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        self.lower = lower
        self.upper = upper
        self.tickers = tickers

    @classmethod
    def unbounded(cls, n: int, tickers: Sequence[str] | None = None) -> "WeightBounds":
        return cls(np.zeros(n), np.ones(n), tickers)

    @classmethod
    def from_mapping(
        cls,
        tickers: Sequence[str],
        limits: Mapping[str, tuple[float, float]] | None = None,
        default: tuple[float, float] = (0.0, 1.0),
    ) -> "WeightBounds":
        limits = dict(limits or {})
        lo = [limits.get(t, default)[0] for t in tickers]
        hi = [limits.get(t, default)[1] for t in tickers]
        return cls(lo, hi, tickers)

    def __len__(self) -> int:
        return len(self.lower)

    def __repr__(self) -> str:
        return f"WeightBounds(lower={self.lower.tolist()}, upper={self.upper.tolist()})"

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.lower == 0) and np.all(self.upper == 1))

    def restrict(self, tickers: Sequence[str]) -> "WeightBounds":
        if self.tickers is None:
            raise ValueError("cannot restrict unlabelled bounds by ticker")
        missing = [t for t in tickers if t not in self.tickers]
        if missing:
            raise InfeasibleBounds(f"no bounds for ticker(s): {', '.join(missing)}")
        idx = [self.tickers.index(t) for t in tickers]
        return WeightBounds(self.lower[idx], self.upper[idx], tickers)


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    sum_min: float
    sum_max: float
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def feasibility_check(bounds: WeightBounds, tickers: Sequence[str] | None = None) -> FeasibilityReport:
    """Check that the simplex intersected with the bounds is non-empty.

    Reports the first violated inequality of ``sum(min) <= 1 <= sum(max)``.
    """
    if tickers is not None:
        bounds = bounds.restrict(tickers)
    smin = float(bounds.lower.sum())
    smax = float(bounds.upper.sum())
    if len(bounds) == 0:
        return FeasibilityReport(False, smin, smax, "no assets")
    if smin > 1 + _SUM_TOL:
        return FeasibilityReport(False, smin, smax, f"sum of minimum weights {smin:g} > 1")
    if smax < 1 - _SUM_TOL:
        return FeasibilityReport(False, smin, smax, f"sum of maximum weights {smax:g} < 1")
    return FeasibilityReport(True, smin, smax)
