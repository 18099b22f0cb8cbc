"""Command-line entry point.

    shallowtrade run --data-dir prices/ --universe tickers.txt --out results/
    shallowtrade replay-paper

Settings are resolved as command-line flags, then ``--config`` (a JSON
object keyed by ``RunConfig`` field names), then defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Sequence

from . import report
from .dataset import HygieneMode, load_series, read_universe
from .errors import ConfigInvalid, IoFailure
from .stats import significance_verdict, chi_squared
from .trials import Arm, TrialOutcome, TrialSettings, aggregate, run_universe

log = logging.getLogger("shallowtrade")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

ARM_CHOICES = {
    "both": (Arm.EXPERIMENTAL, Arm.CONTROL),
    "experimental": (Arm.EXPERIMENTAL,),
    "control": (Arm.CONTROL,),
}

# Published counts and statistics replayed by ``replay-paper``.
PUBLISHED_RESULTS = {
    Arm.CONTROL: {"correct": 278, "incorrect": 222, "statistic": 6.272, "significant": False},
    Arm.EXPERIMENTAL: {"correct": 328, "incorrect": 57, "statistic": 190.755844, "significant": True},
}
PUBLISHED_CRITICAL_VALUE = 6.63


@dataclass(frozen=True)
class RunConfig:
    data_dir: Path
    universe_file: Path
    output_path: Path
    chunk_len: int = 10
    hidden_size: int = 20
    learning_rate: float = 0.5
    epochs: int = 1000
    master_seed: int = 0
    hygiene_mode: HygieneMode = HygieneMode.HOLDOUT
    arms: tuple[Arm, ...] = ARM_CHOICES["both"]

    def validate(self) -> "RunConfig":
        if not self.data_dir.is_dir():
            raise ConfigInvalid(f"data directory not found: {self.data_dir}")
        if not self.universe_file.is_file():
            raise ConfigInvalid(f"universe file not found: {self.universe_file}")
        for name in ("chunk_len", "hidden_size", "epochs"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigInvalid(f"{name} must be a positive integer, got {value!r}")
        if not (isinstance(self.learning_rate, (int, float)) and math.isfinite(self.learning_rate)
                and self.learning_rate > 0):
            raise ConfigInvalid(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigInvalid(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        if not self.arms:
            raise ConfigInvalid("at least one arm is required")
        return self

    def trial_settings(self) -> TrialSettings:
        return TrialSettings(
            master_seed=self.master_seed,
            chunk_len=self.chunk_len,
            hidden_size=self.hidden_size,
            learning_rate=float(self.learning_rate),
            epochs=self.epochs,
            hygiene=self.hygiene_mode,
            arms=self.arms,
        )

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        for key in ("data_dir", "universe_file", "output_path"):
            doc[key] = str(doc[key])
        doc["hygiene_mode"] = self.hygiene_mode.value
        doc["arms"] = [a.value for a in self.arms]
        return doc


def _coerce(name: str, value: Any) -> Any:
    if name in ("data_dir", "universe_file", "output_path"):
        return Path(value)
    if name == "hygiene_mode":
        try:
            return HygieneMode.parse(value)
        except ValueError:
            raise ConfigInvalid(f"unknown mode {value!r}") from None
    if name == "arms":
        if isinstance(value, str):
            if value not in ARM_CHOICES:
                raise ConfigInvalid(f"unknown arms {value!r}")
            return ARM_CHOICES[value]
        try:
            return tuple(dict.fromkeys(Arm(a) for a in value))
        except (TypeError, ValueError):
            raise ConfigInvalid(f"unknown arms {value!r}") from None
    return value


def resolve_config(flags: dict[str, Any], config_file: Path | None = None) -> RunConfig:
    """Merge flag values over an optional JSON config file over defaults."""
    merged: dict[str, Any] = {}
    known = {f.name for f in fields(RunConfig)}
    if config_file is not None:
        try:
            doc = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigInvalid(f"cannot read config file {config_file}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigInvalid("config file must hold a JSON object")
        unknown = set(doc) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        merged.update(doc)
    merged.update({k: v for k, v in flags.items() if v is not None})
    for required in ("data_dir", "universe_file", "output_path"):
        if required not in merged:
            raise ConfigInvalid(f"missing required setting {required}")
    return RunConfig(**{k: _coerce(k, v) for k, v in merged.items()}).validate()


def cmd_run(cfg: RunConfig, stdout=None) -> int:
    """Run every requested arm over the universe and write outcome and summary files."""
    stdout = stdout or sys.stdout
    tickers = read_universe(cfg.universe_file)
    if len(set(tickers)) != len(tickers):
        raise ConfigInvalid("universe file lists a ticker more than once")
    if not tickers:
        raise ConfigInvalid("universe file lists no tickers")
    try:
        cfg.output_path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {cfg.output_path}: {exc}") from exc

    log.info("running %d tickers, arms=%s", len(tickers), [a.value for a in cfg.arms])
    records = run_universe(tickers, lambda t: load_series(cfg.data_dir / f"{t}.csv", t),
                           cfg.trial_settings())
    outcome_text = report.dumps_records(records)
    summary = report.summarize([r.to_record() for r in records])
    text = report.render_text(summary)

    report.atomic_write_text(cfg.output_path / report.OUTCOMES_FILE, outcome_text)
    report.atomic_write_text(cfg.output_path / report.SUMMARY_JSON,
                             json.dumps(summary, indent=2, sort_keys=True) + "\n")
    report.atomic_write_text(cfg.output_path / report.SUMMARY_TEXT, text)
    report.atomic_write_text(cfg.output_path / "config.json",
                             json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True) + "\n")
    stdout.write(text)
    return EXIT_OK


def _published_outcomes(arm: Arm, correct: int, incorrect: int) -> list[TrialOutcome]:
    n = correct + incorrect
    return [TrialOutcome.scored(f"PUB{i:04d}", arm, 1, int(i < correct)) for i in range(n)]


def cmd_replay_paper(stdout=None) -> dict:
    """Recompute both published chi-squared analyses from their counts and check them."""
    stdout = stdout or sys.stdout
    out: dict[str, dict] = {}
    for arm, published in PUBLISHED_RESULTS.items():
        table = aggregate(_published_outcomes(arm, published["correct"], published["incorrect"]), arm)
        result = significance_verdict(chi_squared(table.observed, table.expected))
        matches = (
            math.isclose(result.statistic, published["statistic"], rel_tol=1e-6, abs_tol=1e-9)
            and result.significant == published["significant"]
            and result.critical_value == PUBLISHED_CRITICAL_VALUE
        )
        out[arm.value] = {
            "observed": list(table.observed),
            "expected": list(table.expected),
            "statistic": result.statistic,
            "published_statistic": published["statistic"],
            "df": result.df,
            "critical_value": result.critical_value,
            "significant": result.significant,
            "matches_published": matches,
        }
        verdict = "significant" if result.significant else "not significant"
        stdout.write(
            f"{arm.value:>12}: observed {table.observed}, expected {table.expected}, "
            f"chi2 = {result.statistic:.6f} (published {published['statistic']}), "
            f"critical {result.critical_value} -> {verdict} [{'ok' if matches else 'MISMATCH'}]\n"
        )
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shallowtrade", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experimental and/or control trials over a universe")
    run.add_argument("--config", type=Path, default=None, help="JSON file of RunConfig fields")
    run.add_argument("--data-dir", dest="data_dir", default=None, help="directory of <TICKER>.csv files")
    run.add_argument("--universe", dest="universe_file", default=None, help="ticker list, one per line")
    run.add_argument("--out", dest="output_path", default=None, help="output directory")
    run.add_argument("--chunk-len", dest="chunk_len", type=int, default=None)
    run.add_argument("--hidden", dest="hidden_size", type=int, default=None)
    run.add_argument("--lr", dest="learning_rate", type=float, default=None)
    run.add_argument("--epochs", type=int, default=None)
    run.add_argument("--seed", dest="master_seed", type=int, default=None)
    run.add_argument("--mode", dest="hygiene_mode", choices=["holdout", "paper-faithful"], default=None)
    run.add_argument("--arms", choices=sorted(ARM_CHOICES), default=None)

    replay = sub.add_parser("replay-paper", help="recompute the published chi-squared results")
    replay.add_argument("--out", type=Path, default=None, help="optional JSON file for the replay report")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay-paper":
            result = cmd_replay_paper()
            if args.out is not None:
                report.atomic_write_text(args.out, json.dumps(result, indent=2, sort_keys=True) + "\n")
            return EXIT_OK if all(r["matches_published"] for r in result.values()) else EXIT_CHECK_FAILED
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
        return cmd_run(resolve_config(flags, args.config))
    except ConfigInvalid as exc:
        print(f"shallowtrade: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoFailure as exc:
        print(f"shallowtrade: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
