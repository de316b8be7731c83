"""Run configuration: one INI file with fixed sections and key names.

See ``docs/config.md`` for the key reference. Relative paths are resolved
against the directory containing the config file.
"""

from __future__ import annotations

import configparser
import datetime as dt
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .backtest import FREQUENCIES, BacktestConfig
from .errors import ConfigError
from .margin import MarginConfig
from .pso import OBJECTIVES, PsoParams
from .universe import ScreeningRule

__all__ = ["RunConfig", "load_config", "SCHEMA"]

# section -> allowed keys; [weight_bounds] additionally accepts ticker keys
SCHEMA = {
    "paths": {"prices", "prices_format", "metadata", "outdir"},
    "period": {"start", "end"},
    "run": {"objective", "benchmark"},
    "screening": {"top_n_by_cap", "min_history_years", "as_of", "excluded_tickers", "required_tickers"},
    "weight_bounds": {"default"},
    "backtest": {"rebalance", "initial_value", "transaction_cost_bps", "periods_per_year"},
    "pso": {
        "n_particles", "max_iters", "inertia", "cognitive", "social",
        "stagnation_iters", "seed", "v_max", "n_jobs", "max_assets",
    },
    "margin": {"leverage", "maintenance_ratio", "annual_loan_rate", "call_policy"},
    "report": {"formats"},
}
REPORT_FORMATS = ("csv", "json", "text")


@dataclass(frozen=True)
class RunConfig:
    prices_path: Path
    outdir: Path
    start: dt.date
    end: dt.date
    prices_format: str = "wide"
    metadata_path: Path | None = None
    objective: str = "mar"
    benchmark: str | None = "SPY"
    screening: ScreeningRule = field(default_factory=ScreeningRule)
    bound_default: tuple = (0.0, 1.0)
    bound_limits: dict = field(default_factory=dict)
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    pso: PsoParams = field(default_factory=PsoParams)
    max_assets: int | None = None
    margin: MarginConfig | None = None
    formats: tuple = REPORT_FORMATS
    source: Path | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        return _jsonable(d)

    def digest(self) -> str:
        """SHA-256 of the effective configuration (after overrides).

        ``pso.n_jobs`` is left out: it cannot change any result.
        """
        d = self.to_dict()
        d["pso"].pop("n_jobs")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw) -> "RunConfig":
        """Apply command-line overrides (``seed``, ``start``, ``end``, ``objective``,
        ``rebalance``, ``n_jobs``, ``outdir``); ``None`` values are ignored."""
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = self
        try:
            if "seed" in kw:
                cfg = replace(cfg, pso=replace(cfg.pso, seed=int(kw.pop("seed"))))
            if "n_jobs" in kw:
                cfg = replace(cfg, pso=replace(cfg.pso, n_jobs=int(kw.pop("n_jobs"))))
            if "rebalance" in kw:
                cfg = replace(cfg, backtest=replace(cfg.backtest, rebalance=kw.pop("rebalance")))
            for key in ("start", "end"):
                if key in kw:
                    cfg = replace(cfg, **{key: _date(kw.pop(key), f"--{key}")})
            if "objective" in kw:
                cfg = replace(cfg, objective=kw.pop("objective"))
            if "outdir" in kw:
                cfg = replace(cfg, outdir=Path(kw.pop("outdir")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if kw:
            raise ConfigError(f"unknown override(s): {sorted(kw)}")
        cfg._validate()
        return cfg

    def _validate(self):
        if not self.start < self.end:
            raise ConfigError(f"period.start {self.start} must be before period.end {self.end}")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"run.objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.prices_format not in ("wide", "long"):
            raise ConfigError("paths.prices_format must be 'wide' or 'long'")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, (Path, dt.date)):
        return str(obj)
    return obj


def _date(text, where: str) -> dt.date:
    if isinstance(text, dt.date):
        return text
    try:
        return dt.date.fromisoformat(str(text).strip())
    except ValueError:
        raise ConfigError(f"{where}: not an ISO date: {text!r}") from None


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _pair(text: str, where: str) -> tuple[float, float]:
    parts = _list(text)
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{where}: expected 'min, max', got {text!r}") from None
    return lo, hi


class _Section:
    def __init__(self, parser, name):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def get(self, key, default=None):
        value = self.data.get(key, "").strip()
        return value if value else default

    def typed(self, key, kind, default=None):
        value = self.get(key)
        if value is None:
            return default
        try:
            return kind(value)
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: invalid {kind.__name__} {value!r}") from None


def load_config(path) -> RunConfig:
    """Parse and validate a run config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        if sec == "weight_bounds":
            continue
        unknown = set(parser[sec]) - SCHEMA[sec]
        if unknown:
            raise ConfigError(f"{path}: unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")

    base = path.parent
    paths = _Section(parser, "paths")
    period = _Section(parser, "period")
    run = _Section(parser, "run")

    def resolve(p):
        return None if p is None else (base / p).resolve()

    prices = resolve(paths.get("prices"))
    if prices is None:
        raise ConfigError("paths.prices is required")
    if not prices.is_file():
        raise ConfigError(f"paths.prices: file not found: {prices}")
    meta = resolve(paths.get("metadata"))
    if meta is not None and not meta.is_file():
        raise ConfigError(f"paths.metadata: file not found: {meta}")
    if period.get("start") is None or period.get("end") is None:
        raise ConfigError("period.start and period.end are required")
    start = _date(period.get("start"), "period.start")
    end = _date(period.get("end"), "period.end")

    sc = _Section(parser, "screening")
    rule = ScreeningRule(
        top_n_by_cap=sc.typed("top_n_by_cap", int),
        min_history_years=sc.typed("min_history_years", float),
        excluded_tickers=frozenset(_list(sc.get("excluded_tickers", ""))),
        required_tickers=frozenset(_list(sc.get("required_tickers", ""))),
        as_of=_date(sc.get("as_of"), "screening.as_of") if sc.get("as_of") else start,
    )

    wb = _Section(parser, "weight_bounds")
    default = _pair(wb.get("default", "0, 1"), "weight_bounds.default")
    limits = {k: _pair(v, f"weight_bounds.{k}") for k, v in wb.data.items() if k != "default"}
    for key, (lo, hi) in [("default", default), *limits.items()]:
        if not 0 <= lo <= hi <= 1:
            raise ConfigError(f"weight_bounds.{key}: need 0 <= min <= max <= 1")

    bt = _Section(parser, "backtest")
    rebalance = bt.get("rebalance", "annual")
    if rebalance not in FREQUENCIES:
        raise ConfigError(f"backtest.rebalance must be one of {FREQUENCIES}")
    try:
        backtest = BacktestConfig(
            rebalance=rebalance,
            initial_value=bt.typed("initial_value", float, 1.0),
            transaction_cost_bps=bt.typed("transaction_cost_bps", float, 0.0),
            periods_per_year=bt.typed("periods_per_year", float, 252.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[backtest]: {exc}") from None

    ps = _Section(parser, "pso")
    defaults = PsoParams()
    try:
        pso = PsoParams(
            n_particles=ps.typed("n_particles", int, defaults.n_particles),
            max_iters=ps.typed("max_iters", int, defaults.max_iters),
            inertia=ps.typed("inertia", float, defaults.inertia),
            cognitive=ps.typed("cognitive", float, defaults.cognitive),
            social=ps.typed("social", float, defaults.social),
            stagnation_iters=ps.typed("stagnation_iters", int, defaults.stagnation_iters),
            seed=ps.typed("seed", int, defaults.seed),
            v_max=ps.typed("v_max", float, defaults.v_max),
            n_jobs=ps.typed("n_jobs", int, defaults.n_jobs),
        )
    except ValueError as exc:
        raise ConfigError(f"[pso]: {exc}") from None
    max_assets = ps.typed("max_assets", int)
    if max_assets is not None and max_assets < 1:
        raise ConfigError("pso.max_assets must be >= 1")

    margin = None
    if parser.has_section("margin"):
        mg = _Section(parser, "margin")
        if mg.get("leverage") is None or mg.get("maintenance_ratio") is None:
            raise ConfigError("[margin] needs leverage and maintenance_ratio")
        margin = MarginConfig(
            leverage=mg.typed("leverage", float),
            maintenance_ratio=mg.typed("maintenance_ratio", float),
            annual_loan_rate=mg.typed("annual_loan_rate", float, 0.0),
            call_policy=mg.get("call_policy", "record_only"),
        )

    formats = tuple(_list(_Section(parser, "report").get("formats", ",".join(REPORT_FORMATS))))
    bad = set(formats) - set(REPORT_FORMATS)
    if bad:
        raise ConfigError(f"report.formats: unknown format(s) {sorted(bad)}")

    outdir = resolve(paths.get("outdir", "out"))
    cfg = RunConfig(
        prices_path=prices,
        outdir=outdir,
        start=start,
        end=end,
        prices_format=paths.get("prices_format", "wide"),
        metadata_path=meta,
        objective=run.get("objective", "mar"),
        benchmark=None if run.get("benchmark", "SPY").lower() == "none" else run.get("benchmark", "SPY"),
        screening=rule,
        bound_default=default,
        bound_limits=limits,
        backtest=backtest,
        pso=pso,
        max_assets=max_assets,
        margin=margin,
        formats=formats,
        source=path,
    )
    cfg._validate()
    return cfg
