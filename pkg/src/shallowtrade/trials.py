"""Experimental and control trials over a ticker universe.

For each ticker the experimental arm trains a fresh network on every labeled
window but the last and decides on the last one; the control arm flips a fair
coin. Both arms are scored against the same ground truth, the label of the
final labeled window.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .dataset import (
    DEFAULT_CHUNK_LEN,
    DatasetSplit,
    HygieneMode,
    PriceSeries,
    build_split,
)
from .errors import DataError, EmptyOutcomes, MixedArms
from .network import TrainConfig, decide, forward, init_network, train_many

log = logging.getLogger(__name__)

DEFAULT_HIDDEN = 20


class Arm(str, Enum):
    EXPERIMENTAL = "experimental"
    CONTROL = "control"


# Distinct spawn keys keep the two arms on unrelated random streams.
_ARM_STREAM = {Arm.EXPERIMENTAL: 0, Arm.CONTROL: 1}


@dataclass(frozen=True)
class TrialOutcome:
    ticker: str
    arm: Arm
    decision: int
    truth: int
    correct: bool

    def __post_init__(self):
        if self.correct != (self.decision == self.truth):
            raise ValueError("correct must equal decision == truth")

    @classmethod
    def scored(cls, ticker: str, arm: Arm, decision: int, truth: int) -> "TrialOutcome":
        return cls(ticker, Arm(arm), int(decision), int(truth), int(decision) == int(truth))

    def to_record(self) -> dict:
        return {
            "ticker": self.ticker,
            "arm": self.arm.value,
            "decision": self.decision,
            "truth": self.truth,
            "correct": self.correct,
            "skipped": False,
            "skip_reason": None,
        }


@dataclass(frozen=True)
class SkippedTrial:
    ticker: str
    arm: Arm
    reason: str

    def to_record(self) -> dict:
        return {
            "ticker": self.ticker,
            "arm": self.arm.value,
            "decision": None,
            "truth": None,
            "correct": None,
            "skipped": True,
            "skip_reason": self.reason,
        }


TrialRecord = Union[TrialOutcome, SkippedTrial]


@dataclass(frozen=True)
class ContingencyTable:
    arm: Arm
    n_correct: int
    n_incorrect: int

    @property
    def total(self) -> int:
        return self.n_correct + self.n_incorrect

    @property
    def expected_correct(self) -> float:
        return self.total / 2

    @property
    def expected_incorrect(self) -> float:
        return self.total / 2

    @property
    def observed(self) -> tuple[int, int]:
        return self.n_correct, self.n_incorrect

    @property
    def expected(self) -> tuple[float, float]:
        return self.expected_correct, self.expected_incorrect

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.total


def ticker_seed(master_seed: int, ticker: str, arm: "Arm | str") -> int:
    """64-bit seed for one ticker and arm.

    Depends only on the master seed, the symbol and the arm, so editing the
    universe never changes another ticker's result.
    """
    symbol_key = int.from_bytes(hashlib.blake2b(ticker.encode("utf-8"), digest_size=8).digest(), "little")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(symbol_key, _ARM_STREAM[Arm(arm)]))
    return int(seq.generate_state(1, np.uint64)[0])


def _decide_on(params, split: DatasetSplit) -> int:
    rec, _ = forward(params, split.test_example.features)
    return decide(rec)


def run_experimental_trial(
    series: PriceSeries,
    cfg: TrainConfig,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    hygiene: "HygieneMode | str" = HygieneMode.HOLDOUT,
    hidden_size: int = DEFAULT_HIDDEN,
) -> TrialOutcome:
    """Train a network seeded with ``cfg.seed`` and score its final-window decision."""
    split = build_split(series, chunk_len, hygiene)
    params = init_network((chunk_len, hidden_size, 2), cfg.seed)
    trained = train_many([params], [split.train], cfg)[0]
    return TrialOutcome.scored(series.ticker, Arm.EXPERIMENTAL, _decide_on(trained, split),
                               split.test_example.label)


def _coin_flip(seed: int) -> int:
    return int(np.random.default_rng(seed).integers(0, 2))


def run_control_trial(
    series: PriceSeries,
    rng_seed: int,
    chunk_len: int = DEFAULT_CHUNK_LEN,
) -> TrialOutcome:
    """Score a fair coin flip against the experimental arm's ground truth."""
    split = build_split(series, chunk_len, HygieneMode.HOLDOUT)
    return TrialOutcome.scored(series.ticker, Arm.CONTROL, _coin_flip(rng_seed), split.test_example.label)


def aggregate(outcomes: Iterable[TrialOutcome], arm: "Arm | str") -> ContingencyTable:
    arm = Arm(arm)
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyOutcomes(f"no {arm.value} outcomes to aggregate")
    stray = {o.arm for o in outcomes if o.arm is not arm}
    if stray:
        raise MixedArms(f"expected only {arm.value} outcomes, found {sorted(a.value for a in stray)}")
    n_correct = sum(1 for o in outcomes if o.correct)
    return ContingencyTable(arm, n_correct, len(outcomes) - n_correct)


@dataclass(frozen=True)
class TrialSettings:
    master_seed: int = 0
    chunk_len: int = DEFAULT_CHUNK_LEN
    hidden_size: int = DEFAULT_HIDDEN
    learning_rate: float = 0.5
    epochs: int = 1000
    hygiene: HygieneMode = HygieneMode.HOLDOUT
    arms: tuple[Arm, ...] = (Arm.EXPERIMENTAL, Arm.CONTROL)

    def train_config(self, ticker: str) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.epochs,
                           ticker_seed(self.master_seed, ticker, Arm.EXPERIMENTAL))


def _skip_reason(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def run_universe(
    tickers: Sequence[str],
    load: Callable[[str], PriceSeries],
    settings: TrialSettings = TrialSettings(),
) -> list[TrialRecord]:
    """Run the requested arms for every ticker, in universe order.

    ``load`` maps a symbol to its series. Data errors, raised while loading
    or while windowing, turn into skip records for every requested arm.
    Experimental networks are trained together in stacks; the result is
    identical to running ``run_experimental_trial`` ticker by ticker.
    """
    arms = tuple(Arm(a) for a in settings.arms)
    splits: dict[str, DatasetSplit] = {}
    skipped: dict[str, str] = {}
    for ticker in tickers:
        try:
            series = load(ticker)
            splits[ticker] = build_split(series, settings.chunk_len, settings.hygiene)
        except (DataError, OSError) as exc:
            skipped[ticker] = _skip_reason(exc)
            log.info("skipping %s: %s", ticker, skipped[ticker])

    decisions: dict[str, int] = {}
    if Arm.EXPERIMENTAL in arms and splits:
        names = list(splits)
        cfg = TrainConfig(settings.learning_rate, settings.epochs)
        shape = (settings.chunk_len, settings.hidden_size, 2)
        nets = [init_network(shape, settings.train_config(t).seed) for t in names]
        trained = train_many(nets, [splits[t].train for t in names], cfg)
        decisions = {t: _decide_on(p, splits[t]) for t, p in zip(names, trained)}

    records: list[TrialRecord] = []
    for ticker in tickers:
        for arm in arms:
            if ticker in skipped:
                records.append(SkippedTrial(ticker, arm, skipped[ticker]))
                continue
            truth = splits[ticker].test_example.label
            if arm is Arm.EXPERIMENTAL:
                decision = decisions[ticker]
            else:
                decision = _coin_flip(ticker_seed(settings.master_seed, ticker, Arm.CONTROL))
            records.append(TrialOutcome.scored(ticker, arm, decision, truth))
    return records


def scored(records: Iterable[TrialRecord], arm: "Arm | str") -> list[TrialOutcome]:
    arm = Arm(arm)
    return [r for r in records if isinstance(r, TrialOutcome) and r.arm is arm]
