"""File formats for run artifacts and the side-by-side comparison table.

Floats are written with ``repr`` so that identical inputs give byte-identical
files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .backtest import BacktestResult, Weights
from .errors import DataError, UnparsableValue
from .margin import MarginEvent
from .metrics import EquityCurve, MetricsReport


def _num(x) -> str:
    return repr(float(x))


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_equity_csv(path, curve: EquityCurve) -> None:
    """``date,value,log10_value`` rows for log-scale plotting."""
    _write_rows(
        path,
        ("date", "value", "log10_value"),
        ((str(d), _num(v), _num(math.log10(v))) for d, v in zip(curve.dates, curve.values)),
    )


def write_metrics_json(path, report: MetricsReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_metrics_json(path) -> MetricsReport:
    return MetricsReport(**json.loads(Path(path).read_text(encoding="utf-8")))


def write_rebalance_csv(path, result: BacktestResult) -> None:
    _write_rows(
        path,
        ("date", "turnover", "cost"),
        (
            (str(d), _num(t), _num(c))
            for d, t, c in zip(result.rebalance_dates, result.turnover, result.costs)
        ),
    )


def write_weights_csv(path, weights: Weights) -> None:
    _write_rows(path, ("ticker", "weight"), ((t, _num(w)) for t, w in zip(weights.tickers, weights.values)))


def read_weights_csv(path) -> Weights:
    path = Path(path)
    if not path.exists():
        raise DataError(f"weights file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"ticker", "weight"} - set(reader.fieldnames):
            raise DataError(f"{path}: expected header 'ticker,weight'")
        mapping: dict[str, float] = {}
        for lineno, row in enumerate(reader, start=2):
            t = row["ticker"].strip()
            if t in mapping:
                raise DataError(f"{path}:{lineno}: duplicate ticker {t}")
            try:
                mapping[t] = float(row["weight"])
            except ValueError:
                raise UnparsableValue(f"{path}:{lineno}: bad weight {row['weight']!r}") from None
    try:
        return Weights.from_mapping(mapping)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_history_csv(path, history: Sequence[float]) -> None:
    _write_rows(path, ("iteration", "best_fitness"), ((i, _num(f)) for i, f in enumerate(history)))


def write_margin_events_csv(path, events: Sequence[MarginEvent]) -> None:
    _write_rows(
        path,
        ("date", "position_value", "equity", "equity_ratio", "action"),
        (
            (str(e.date), _num(e.position_value), _num(e.equity), _num(e.equity_ratio), e.action)
            for e in events
        ),
    )


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def _weights_label(weights: Mapping[str, float]) -> str:
    items = sorted(((t, w) for t, w in weights.items() if w > 0), key=lambda kv: (-kv[1], kv[0]))
    return ", ".join(f"{t} {100 * w:.1f}%" for t, w in items)


def comparison_table(
    columns: Mapping[str, MetricsReport],
    weights: Mapping[str, Mapping[str, float]] | None = None,
    header_rows: Sequence[tuple[str, str]] = (),
) -> str:
    """Plain-text table with one column per portfolio.

    ``header_rows`` are shared ``(label, value)`` rows such as the period or
    rebalancing frequency; percentages and ratios are shown to two decimals.
    """
    names = list(columns)
    rows: list[list[str]] = [[""] + names]
    for label, value in header_rows:
        rows.append([label, value] + [""] * (len(names) - 1))
    if weights:
        rows.append(["Weights"] + [_weights_label(weights.get(n, {})) for n in names])
    rep = [columns[n] for n in names]
    rows.append(["CAGR"] + [_pct(r.cagr) for r in rep])
    rows.append(["Maximum Drawdown"] + [_pct(r.max_drawdown) for r in rep])
    rows.append(["Sharpe Ratio"] + [f"{r.sharpe:.2f}" for r in rep])
    rows.append(["Sortino Ratio"] + [f"{r.sortino:.2f}" for r in rep])
    rows.append(["CAGR/MaxDD Ratio"] + [f"{r.mar:.2f}" for r in rep])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def curve_from_csv(path) -> EquityCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return EquityCurve(
        np.array([r["date"] for r in rows], dtype="datetime64[D]"),
        np.array([float(r["value"]) for r in rows]),
    )
