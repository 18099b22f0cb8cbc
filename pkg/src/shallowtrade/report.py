"""Outcome files and the summary derived from them.

The summary is a pure fold over outcome records, so it can always be rebuilt
from ``outcomes.jsonl`` alone.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IoFailure
from .stats import significance_verdict, chi_squared
from .trials import Arm, ContingencyTable, TrialRecord

OUTCOMES_FILE = "outcomes.jsonl"
SUMMARY_JSON = "summary.json"
SUMMARY_TEXT = "summary.txt"


def atomic_write_text(path: "str | Path", text: str) -> None:
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def dumps_records(records: Iterable[TrialRecord]) -> str:
    return "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in records)


def read_records(path: "str | Path") -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def table_summary(table: ContingencyTable) -> dict:
    result = significance_verdict(chi_squared(table.observed, table.expected))
    return {
        "n_correct": table.n_correct,
        "n_incorrect": table.n_incorrect,
        "expected_correct": table.expected_correct,
        "expected_incorrect": table.expected_incorrect,
        "accuracy": table.accuracy,
        "chi_squared": {
            "statistic": result.statistic,
            "df": result.df,
            "critical_value": result.critical_value,
            "significant": result.significant,
        },
    }


def summarize(records: Sequence[Mapping]) -> dict:
    """Contingency tables, chi-squared verdicts and skip list from outcome records."""
    arms: dict[str, dict | None] = {}
    skipped = []
    for arm in Arm:
        rows = [r for r in records if r["arm"] == arm.value]
        if not rows:
            continue
        scored = [r for r in rows if not r["skipped"]]
        n_correct = sum(1 for r in scored if r["correct"])
        arms[arm.value] = (
            table_summary(ContingencyTable(arm, n_correct, len(scored) - n_correct)) if scored else None
        )
    for r in records:
        if r["skipped"]:
            skipped.append({"ticker": r["ticker"], "arm": r["arm"], "reason": r["skip_reason"]})
    return {"arms": arms, "skipped": skipped}


def render_text(summary: Mapping) -> str:
    lines = []
    for arm, table in summary["arms"].items():
        if table is None:
            lines.append(f"{arm:>12}: no scored tickers")
            continue
        chi = table["chi_squared"]
        verdict = "significant" if chi["significant"] else "not significant"
        lines.append(
            f"{arm:>12}: {table['n_correct']} correct / {table['n_incorrect']} incorrect "
            f"(expected {table['expected_correct']:g} / {table['expected_incorrect']:g}), "
            f"accuracy {table['accuracy']:.4f}"
        )
        lines.append(
            f"{'':>12}  chi2 = {chi['statistic']:.6f}, df = {chi['df']}, "
            f"critical = {chi['critical_value']} -> {verdict}"
        )
    skipped = summary["skipped"]
    tickers = sorted({s["ticker"] for s in skipped})
    lines.append(f"skipped tickers: {len(tickers)}")
    seen = set()
    for s in skipped:
        if s["ticker"] not in seen:
            seen.add(s["ticker"])
            lines.append(f"  {s['ticker']}: {s['reason']}")
    return "\n".join(lines) + "\n"
