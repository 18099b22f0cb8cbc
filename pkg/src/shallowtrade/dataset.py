"""Price ingestion, windowing and next-window-max labeling.

A ticker's daily highs are cut into consecutive, non-overlapping chunks of
``chunk_len`` days. Chunk ``k`` is labeled 1 (buy) when the highest high of
chunk ``k + 1`` is strictly greater than its own highest high, else 0 (sell).
The most recent chunk only ever contributes to the label of the chunk before
it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import (
    EmptySeries,
    MalformedCsv,
    NonPositivePrice,
    SeriesTooShort,
    TooFewExamples,
)

DEFAULT_CHUNK_LEN = 10


class HygieneMode(str, Enum):
    """How the final labeled example relates to the training set."""

    HOLDOUT = "holdout"
    PAPER_FAITHFUL = "paper_faithful"

    @classmethod
    def parse(cls, value: "str | HygieneMode") -> "HygieneMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).replace("-", "_"))


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: tuple[date, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.highs):
            raise ValueError("dates and highs must have the same length")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValueError(f"{self.ticker}: dates not strictly increasing at {cur}")
        for d, h in zip(self.dates, self.highs):
            if not math.isfinite(h) or h <= 0:
                raise NonPositivePrice(f"{self.ticker}: high {h!r} on {d} is not a positive finite price")

    def __len__(self) -> int:
        return len(self.highs)

    @property
    def days(self) -> list[tuple[date, float]]:
        return list(zip(self.dates, self.highs))


@dataclass(frozen=True)
class Chunk:
    index: int  # 1-based
    highs: tuple[float, ...]

    @property
    def max_high(self) -> float:
        return max(self.highs)

    def __len__(self) -> int:
        return len(self.highs)


@dataclass(frozen=True)
class LabeledExample:
    features: tuple[float, ...]
    raw_chunk: Chunk
    label: int


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[LabeledExample, ...]
    test_example: LabeledExample
    hygiene_mode: HygieneMode


def _read_text(raw: "bytes | str | BinaryIO") -> str:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, (bytes, bytearray)):
        data = bytes(raw)
    else:
        data = raw.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"input is not valid UTF-8: {exc}") from exc


def parse_price_csv(raw: "bytes | str | BinaryIO", ticker: str) -> PriceSeries:
    """Parse a Yahoo-style historical export into a date-sorted ``PriceSeries``.

    Only ``Date`` (ISO yyyy-mm-dd) and ``High`` are read; other columns are
    ignored. A row whose High is missing or non-numeric aborts the parse
    with ``MalformedCsv`` naming the offending line.
    """
    reader = csv.reader(io.StringIO(_read_text(raw)))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptySeries(f"{ticker}: empty CSV") from None
    except csv.Error as exc:
        raise MalformedCsv(f"{ticker}: unreadable header: {exc}") from exc
    names = [h.strip() for h in header]
    if "Date" not in names or "High" not in names:
        raise MalformedCsv(f"{ticker}: header must contain Date and High columns, got {names}")
    i_date, i_high = names.index("Date"), names.index("High")

    rows: dict[date, float] = {}
    try:
        for record in reader:
            line = reader.line_num
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != len(names):
                raise MalformedCsv(
                    f"{ticker}: line {line} has {len(record)} fields, expected {len(names)}"
                )
            try:
                day = date.fromisoformat(record[i_date].strip())
            except ValueError:
                raise MalformedCsv(f"{ticker}: line {line} has bad Date {record[i_date]!r}") from None
            try:
                high = float(record[i_high])
            except ValueError:
                raise MalformedCsv(f"{ticker}: line {line} has non-numeric High {record[i_high]!r}") from None
            if not math.isfinite(high):
                raise MalformedCsv(f"{ticker}: line {line} has non-finite High {record[i_high]!r}")
            if high <= 0:
                raise NonPositivePrice(f"{ticker}: line {line} has High {high} <= 0")
            if day in rows:
                raise MalformedCsv(f"{ticker}: line {line} repeats date {day}")
            rows[day] = high
    except csv.Error as exc:
        raise MalformedCsv(f"{ticker}: line {reader.line_num}: {exc}") from exc

    if not rows:
        raise EmptySeries(f"{ticker}: no data rows")
    ordered = sorted(rows)
    return PriceSeries(ticker, tuple(ordered), tuple(rows[d] for d in ordered))


def load_series(path: "str | Path", ticker: str | None = None) -> PriceSeries:
    path = Path(path)
    with path.open("rb") as fh:
        return parse_price_csv(fh, ticker or path.stem)


def read_universe(path: "str | Path") -> list[str]:
    """Ticker symbols, one per line. Blank lines and ``#`` comments are ignored."""
    tickers = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        symbol = line.split("#", 1)[0].strip()
        if symbol:
            tickers.append(symbol)
    return tickers


def chunk_series(series: PriceSeries, chunk_len: int = DEFAULT_CHUNK_LEN) -> list[Chunk]:
    """Cut the series into non-overlapping windows ending at the latest day.

    Leftover days that do not fill a whole window are dropped from the old end.
    """
    if chunk_len < 1:
        raise ValueError("chunk_len must be positive")
    n_days = len(series)
    if n_days < 2 * chunk_len:
        raise SeriesTooShort(
            f"{series.ticker}: {n_days} days, need at least {2 * chunk_len} for chunk_len {chunk_len}"
        )
    n_chunks = n_days // chunk_len
    start = n_days - n_chunks * chunk_len
    highs = series.highs
    return [
        Chunk(k + 1, tuple(highs[start + k * chunk_len: start + (k + 1) * chunk_len]))
        for k in range(n_chunks)
    ]


def normalize_chunk(chunk: Chunk) -> tuple[float, ...]:
    """Min-max scale the window's highs to [0, 1]; a flat window maps to 0.5."""
    highs = np.asarray(chunk.highs, dtype=float)
    lo, hi = highs.min(), highs.max()
    if hi == lo:
        return (0.5,) * len(highs)
    return tuple(float(v) for v in (highs - lo) / (hi - lo))


def label_chunks(chunks: Sequence[Chunk]) -> list[LabeledExample]:
    if len(chunks) < 2:
        raise SeriesTooShort(f"need at least 2 chunks to label, got {len(chunks)}")
    return [
        LabeledExample(normalize_chunk(cur), cur, int(nxt.max_high > cur.max_high))
        for cur, nxt in zip(chunks, chunks[1:])
    ]


def split_train_test(
    examples: Sequence[LabeledExample],
    mode: "HygieneMode | str" = HygieneMode.HOLDOUT,
) -> DatasetSplit:
    """Split labeled examples; the test example is always the most recent one.

    ``holdout`` trains on every earlier example. ``paper_faithful`` trains on
    all of them, test example included.
    """
    mode = HygieneMode.parse(mode)
    if len(examples) < 2:
        raise TooFewExamples(f"need at least 2 labeled examples, got {len(examples)}")
    test = examples[-1]
    train = tuple(examples) if mode is HygieneMode.PAPER_FAITHFUL else tuple(examples[:-1])
    return DatasetSplit(train, test, mode)


def build_split(
    series: PriceSeries,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    mode: "HygieneMode | str" = HygieneMode.HOLDOUT,
) -> DatasetSplit:
    return split_train_test(label_chunks(chunk_series(series, chunk_len)), mode)


def feature_matrix(examples: Iterable[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack examples into an ``(n, L)`` feature matrix and an ``(n,)`` label vector."""
    examples = list(examples)
    x = np.array([e.features for e in examples], dtype=float)
    y = np.array([e.label for e in examples], dtype=np.int64)
    return x, y
