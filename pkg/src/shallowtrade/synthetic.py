"""Synthetic price histories with known labeling behaviour."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .dataset import PriceSeries

START = date(2016, 1, 4)


def trading_days(n: int, start: date = START) -> tuple[date, ...]:
    """``n`` consecutive weekdays from ``start``."""
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return tuple(days)


def trending_series(ticker: str, n_days: int = 252, daily_drift: float = 0.01,
                    noise: float = 0.002, seed: int = 0, start_price: float = 100.0) -> PriceSeries:
    """Geometric trend with small multiplicative noise.

    With ``|daily_drift|`` well above ``noise`` every window's max is strictly
    above (rising) or below (falling) the previous window's max.
    """
    rng = np.random.default_rng(seed)
    steps = daily_drift + noise * rng.standard_normal(n_days)
    highs = start_price * np.exp(np.cumsum(steps))
    return PriceSeries(ticker, trading_days(n_days), tuple(float(h) for h in highs))


def random_walk_series(ticker: str, n_days: int = 252, volatility: float = 0.02,
                       seed: int = 0, start_price: float = 100.0) -> PriceSeries:
    rng = np.random.default_rng(seed)
    highs = start_price * np.exp(np.cumsum(volatility * rng.standard_normal(n_days)))
    return PriceSeries(ticker, trading_days(n_days), tuple(float(h) for h in highs))


def to_csv(series: PriceSeries) -> str:
    """Render as a Yahoo-style export; only High carries the series, the rest is filler."""
    lines = ["Date,Open,High,Low,Close,Adj Close,Volume"]
    for d, h in zip(series.dates, series.highs):
        lo = h * 0.99
        lines.append(f"{d.isoformat()},{lo!r},{h!r},{lo!r},{lo!r},{lo!r},1000")
    return "\n".join(lines) + "\n"
