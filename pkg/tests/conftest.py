import numpy as np
import pytest

from marswarm.synthetic import gbm_prices

# US large caps with 10+ years of history used in the published experiment
REFERENCE_TICKERS = """
AAPL NVDA MSFT AMZN GOOGL GOOG META TSLA AVGO BRK-B BRK-A WMT LLY JPM V MA ORCL
UNH COST XOM NFLX HD PG JNJ BAC ABBV CRM TMUS KO CVX WFC CSCO IBM PM ABT MS GE
MCD AXP ISRG MRK GS TMO NOW ADBE BX DIS PEP QCOM T AMD VZ CAT TXN BKNG SPGI INTU
RTX C AMGN BSX PGR UNP BLK SCHW DHR SYK PFE LOW NEE TJX BA AMAT ANET CMCSA HON
PANW FI DE GILD SBUX ADP KKR COP VRTX PLD MMC MU BMY NKE MELI ADI LRCX INTC KLAC
LMT UPS IBKR WELL ICE
""".split()

ACCEPTANCE_RESULTS = {}

BASE_CONFIG = """
[paths]
prices = prices.csv
metadata = meta.csv
outdir = out

[period]
start = 2015-01-02
end = 2017-12-29

[run]
objective = mar
benchmark = SPY

[screening]
top_n_by_cap = 3
min_history_years = 1

[backtest]
rebalance = annual

[pso]
n_particles = 16
max_iters = 40
seed = 7

[margin]
leverage = 1.5
maintenance_ratio = 0.25
"""


def write_prices_csv(path, prices):
    lines = ["date," + ",".join(prices.tickers)]
    for d, row in zip(prices.dates, prices.prices):
        lines.append(str(d) + "," + ",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_project(root, prices=None, meta_rows=None, config=BASE_CONFIG):
    """Lay out prices.csv, meta.csv and run.ini under ``root``; return the config path."""
    if prices is None:
        prices = gbm_prices(
            ["SPY", "AAA", "BBB", "CCC", "DDD"], n_days=756,
            mu=[0.08, 0.2, 0.05, 0.12, 0.0], sigma=[0.15, 0.35, 0.1, 0.25, 0.3], seed=17,
        )
    write_prices_csv(root / "prices.csv", prices)
    if meta_rows is None:
        meta_rows = [
            ("AAA", 4e11, "2005-01-03"),
            ("BBB", 3e11, "2001-06-01"),
            ("CCC", 2e11, "2010-03-15"),
            ("DDD", 1e11, "2014-11-01"),  # too young for the age rule
        ]
    meta = ["ticker,market_cap,first_trade_date"] + [f"{t},{c!r},{d}" for t, c, d in meta_rows]
    (root / "meta.csv").write_text("\n".join(meta) + "\n", encoding="utf-8")
    cfg = root / "run.ini"
    cfg.write_text(config.lstrip("\n"), encoding="utf-8")
    return cfg


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text.lstrip("\n"), encoding="utf-8")
        return p

    return _write


@pytest.fixture
def small_prices():
    return gbm_prices(["AAA", "BBB", "CCC"], n_days=300, mu=[0.15, 0.05, 0.1], sigma=[0.3, 0.1, 0.2], seed=3)


def pytest_configure(config):
    config.addinivalue_line("markers", "ac(key, title): acceptance criterion recorded in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    if call.when == "call":
        item.rep_call = outcome.get_result()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, title = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{status:<5} {key}  {title}")
