from datetime import date, timedelta

import pytest

from shallowtrade.dataset import Chunk, PriceSeries
from shallowtrade.synthetic import random_walk_series, trending_series


def series_from_highs(highs, ticker="TEST"):
    start = date(2016, 1, 4)
    return PriceSeries(ticker, tuple(start + timedelta(days=i) for i in range(len(highs))),
                       tuple(float(h) for h in highs))


def chunks_with_maxima(maxima, length=3):
    """Chunks whose highest high is the given value (placed mid-window)."""
    out = []
    for k, m in enumerate(maxima, start=1):
        highs = [m * 0.5] * length
        highs[length // 2] = m
        out.append(Chunk(k, tuple(float(h) for h in highs)))
    return out


@pytest.fixture
def rising():
    return trending_series("UP", daily_drift=0.01, seed=1)


@pytest.fixture
def falling():
    return trending_series("DOWN", daily_drift=-0.01, seed=2)


@pytest.fixture
def walk():
    return random_walk_series("WALK", seed=3)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record an acceptance criterion's verdict, then assert it."""
    def check(name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        _CRITERIA.append(line)
        print(line)
        assert passed, line
    return check


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
