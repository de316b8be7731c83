"""Leveraged margin-account simulation over an unlevered equity curve.

The account starts with own capital ``C = v_0`` and a position ``leverage * C``
financed by a loan of ``(leverage - 1) * C``. The position follows the
relative moves of the unlevered curve; the loan accrues interest on an
act/365.25 basis between observations. Breaches are checked on each close
only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .metrics import DAYS_PER_YEAR, EquityCurve

__all__ = [
    "CALL_POLICIES",
    "EXHAUSTED_SENTINEL",
    "MarginConfig",
    "MarginEvent",
    "simulate_margin",
    "max_safe_leverage",
    "call_threshold",
]

CALL_POLICIES = ("record_only", "liquidate_to_initial")
EXHAUSTED_SENTINEL = 1e-12
# relative slack on the maintenance test; absorbs rounding when a drawdown
# lands exactly on the analytical bound
_BREACH_RTOL = 1e-12


@dataclass(frozen=True)
class MarginConfig:
    leverage: float
    maintenance_ratio: float
    annual_loan_rate: float = 0.0
    call_policy: str = "record_only"

    def __post_init__(self):
        if not self.leverage >= 1:
            raise InvalidConfig(f"leverage must be >= 1, got {self.leverage}")
        if not 0 < self.maintenance_ratio < 1:
            raise InvalidConfig(
                f"maintenance_ratio must be in (0, 1), got {self.maintenance_ratio}"
            )
        if not self.maintenance_ratio < 1 / self.leverage:
            raise InvalidConfig(
                f"maintenance_ratio {self.maintenance_ratio} must be below the initial "
                f"equity ratio 1/leverage = {1 / self.leverage:.6g}; "
                "the account would be called at inception"
            )
        if not self.annual_loan_rate >= 0:
            raise InvalidConfig("annual_loan_rate must be non-negative")
        if self.call_policy not in CALL_POLICIES:
            raise InvalidConfig(f"call_policy must be one of {CALL_POLICIES}")


@dataclass(frozen=True)
class MarginEvent:
    date: np.datetime64
    position_value: float
    equity: float
    equity_ratio: float
    action: str

    def as_row(self) -> tuple:
        return (str(self.date), self.position_value, self.equity, self.equity_ratio, self.action)


def call_threshold(leverage: float, maintenance_ratio: float) -> float:
    """Unlevered value ratio ``v_t / v_0`` below which a call fires (zero interest)."""
    return (leverage - 1.0) / (leverage * (1.0 - maintenance_ratio))


def simulate_margin(curve: EquityCurve, config: MarginConfig) -> tuple[EquityCurve, list[MarginEvent]]:
    """Simulate the margin account and return its equity curve and events.

    A ``call_issued`` event fires on each close where equity first drops below
    ``maintenance_ratio * position`` (a continuing breach is not re-reported).
    Under ``liquidate_to_initial`` assets are sold to pay down the loan until
    the equity ratio is back at ``1 / leverage``. If equity reaches zero the
    account is ``exhausted`` and the curve is held at a tiny positive sentinel.
    """
    v = curve.values
    dates = curve.dates
    lev = config.leverage
    m = config.maintenance_ratio
    own = v[0]
    position = lev * own
    loan = position - own
    anchor_pos, anchor_v = position, v[0]
    equity_out = np.empty_like(v)
    equity_out[0] = own
    events: list[MarginEvent] = []
    in_breach = False
    day_gaps = np.diff(dates) / np.timedelta64(1, "D")

    for t in range(1, len(v)):
        if config.annual_loan_rate and loan > 0:
            loan *= 1.0 + config.annual_loan_rate * day_gaps[t - 1] / DAYS_PER_YEAR
        position = anchor_pos * (v[t] / anchor_v)
        equity = position - loan
        if equity <= 0:
            events.append(MarginEvent(dates[t], position, equity, equity / position, "exhausted"))
            equity_out[t:] = EXHAUSTED_SENTINEL
            break
        breached = equity < m * position * (1.0 - _BREACH_RTOL)
        if breached and not in_breach:
            events.append(MarginEvent(dates[t], position, equity, equity / position, "call_issued"))
            if config.call_policy == "liquidate_to_initial":
                target = lev * equity
                sold = position - target
                position, loan = target, loan - sold
                events.append(
                    MarginEvent(dates[t], position, equity, equity / position, "liquidated")
                )
                anchor_pos, anchor_v = position, v[t]
                breached = False
        in_breach = breached
        equity_out[t] = equity
    return EquityCurve(dates, equity_out), events


def max_safe_leverage(mdd: float, maintenance_ratio: float) -> float:
    """Largest leverage whose position survives a ``mdd`` decline without a call.

    From ``P (1 - mdd) >= L / (1 - m)`` with ``L = P (lev - 1) / lev``. Assumes
    zero interest and the drawdown starting with the loan at its initial level.
    """
    if not 0 <= mdd < 1:
        raise ValueError("mdd must be in [0, 1)")
    if not 0 < maintenance_ratio < 1:
        raise ValueError("maintenance_ratio must be in (0, 1)")
    return 1.0 / (1.0 - (1.0 - mdd) * (1.0 - maintenance_ratio))
