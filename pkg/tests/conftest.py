from __future__ import annotations

import datetime as dt
import importlib
import sys
from pathlib import Path

import pytest

from signal_miner.market import PriceBar, PriceSeries

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))  # makes ``oracle`` importable


def _backends():
    out = [pytest.param("signal_miner._pykernels", id="python")]
    try:
        importlib.import_module("signal_miner._ckernels")
    except ImportError:
        out.append(pytest.param("signal_miner._ckernels", id="cython",
                                marks=pytest.mark.skip(reason="compiled kernels not built")))
    else:
        out.append(pytest.param("signal_miner._ckernels", id="cython"))
    return out


@pytest.fixture(params=_backends())
def kern(request):
    return importlib.import_module(request.param)


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


def make_series(symbol: str, start: dt.date, closes, weekdays_only: bool = True) -> PriceSeries:
    """Series with one bar per (week)day from ``start``; OHLC all equal the close."""
    bars = []
    day = start
    for c in closes:
        while weekdays_only and day.weekday() >= 5:
            day += dt.timedelta(days=1)
        bars.append(PriceBar(day, c, c, c, c, 0))
        day += dt.timedelta(days=1)
    return PriceSeries(symbol, bars)


def write_prices_csv(path: Path, series: dict[str, PriceSeries]) -> Path:
    lines = ["symbol,date,open,high,low,close,volume"]
    for s, ps in series.items():
        for b in ps.bars:
            lines.append(f"{s},{b.date},{b.open},{b.high},{b.low},{b.close},{b.volume}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
