"""Query-suite benchmark: repeated timed runs, median per query, CSV report."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .engine import ExecConfig, Executor, PartitionedStore, SkewReport, skew
from .errors import QueryError
from .query import parse

TABLE3_SUITE: Tuple[Tuple[str, str], ...] = (
    ("OM Type Common", 'FilterType(om, "ce:abstract")'),
    ("Genia Type Common", 'FilterType(genia, "sentence")'),
    ("Genia Type Very Common", 'FilterType(genia, "word")'),
    ("Genia Attribute Very Common", 'FilterProperty(genia, "orig", "the")'),
    ("Genia Attribute Typical", 'FilterProperty(genia, "orig", "heart")'),
    ("Genia Attribute Rare", 'FilterProperty(genia, "orig", "adrenocortical")'),
    ("Genia Attribute Regex Common", 'RegexProperty(genia, "orig", "^he*")'),
    ("Genia Attribute Regex Rare", 'RegexProperty(genia, "orig", "^adrenoc*")'),
    ("Sentence over Heart",
     'Contains(FilterType(om, "ce:sentence"), FilterProperty(genia, "orig", "heart"))'),
    ("Heart in Sentence",
     'ContainedIn(FilterProperty(genia, "orig", "heart"), FilterType(genia, "sentence"))'),
    ("Sentence in Abstract",
     'ContainedIn(FilterType(genia, "sentence"), FilterType(om, "ce:abstract"))'),
    ("Heart in Sentence in Abstract",
     'ContainedIn(FilterProperty(genia, "orig", "heart"), '
     'ContainedIn(FilterType(om, "ce:sentence"), FilterType(om, "ce:abstract")))'),
)

CSV_HEADER = ("query", "reps", "median_ms", "count", "workers", "partitions")


def table3_suite() -> List[Tuple[str, str]]:
    return list(TABLE3_SUITE)


@dataclass
class QueryRecord:
    name: str
    expr: str
    runs: List[float] = field(default_factory=list)
    count: int = 0
    slowest_task: List[float] = field(default_factory=list)

    @property
    def median(self) -> float:
        return statistics.median(self.runs)


@dataclass
class BenchReport:
    workers: int
    partitions: int
    records: List[QueryRecord] = field(default_factory=list)
    skew: Optional[SkewReport] = None
    corpus: Optional[dict] = None
    valid: bool = True
    error: Optional[str] = None

    def record(self, name: str) -> QueryRecord:
        return next(r for r in self.records if r.name == name)

    def to_json(self) -> str:
        doc = {
            "workers": self.workers,
            "partitions": self.partitions,
            "valid": self.valid,
            "error": self.error,
            "corpus": self.corpus,
            "skew": asdict(self.skew) if self.skew else None,
            "queries": [
                {"query": r.name, "expr": r.expr, "runs": r.runs, "median": r.median if r.runs else None,
                 "count": r.count, "slowest_task": r.slowest_task}
                for r in self.records
            ],
        }
        return json.dumps(doc, indent=2)


class BenchError(RuntimeError):
    def __init__(self, message: str, report: BenchReport):
        super().__init__(message)
        self.report = report


def run_bench(suite: Sequence[Tuple[str, str]], store: PartitionedStore, cfg: ExecConfig,
              reps: int = 3, corpus: Optional[dict] = None) -> BenchReport:
    """Time every query ``reps`` times; timings exclude loading and partitioning.

    A failing query stops the run; the partial report is attached to the
    raised BenchError with ``valid`` set to False.
    """
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        raise ValueError("reps must be a positive integer")
    report = BenchReport(workers=cfg.workers, partitions=len(store), skew=skew(store), corpus=corpus)
    with Executor(store, cfg.workers) as ex:
        for name, text in suite:
            rec = QueryRecord(name, text)
            report.records.append(rec)
            try:
                node = parse(text)
                for _ in range(reps):
                    result, metrics = ex.run(node)
                    count = len(result)
                    if rec.runs and count != rec.count:
                        raise RuntimeError(f"result count changed between runs ({rec.count} then {count})")
                    rec.count = count
                    rec.runs.append(metrics.wall)
                    rec.slowest_task.append(metrics.slowest_task)
            except (QueryError, RuntimeError, ValueError) as exc:
                report.valid = False
                report.error = f"{name}: {exc}"
                raise BenchError(report.error, report) from exc
    return report


def report_csv(r: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in r.records:
        if not rec.runs:
            continue
        w.writerow((rec.name, len(rec.runs), f"{rec.median * 1000:.6f}", rec.count, r.workers, r.partitions))
    return buf.getvalue()


def parse_report_csv(text: str) -> List[Dict[str, object]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["reps"] = int(row["reps"])
        row["median_ms"] = float(row["median_ms"])
        row["count"] = int(row["count"])
        row["workers"] = int(row["workers"])
        row["partitions"] = int(row["partitions"])
    return rows
