"""Document-hash partitioning and partition-parallel query execution.

All annotations of one document land in the same partition, so every operator
can run on each partition independently and the results only need to be
concatenated in document order. Workers are forked processes pulling
partition indices from one shared counter; a large partition therefore shows
up as a long-tail task.
"""

from __future__ import annotations

import gc
import multiprocessing
import os
import statistics
from array import array
import time
from dataclasses import dataclass, field
from itertools import chain
from operator import itemgetter
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .model import AnnotationDataset, canonical_key
from .query import Call, Expr, Ref, check, evaluate, is_anchored, parse

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def partition_of(doc_id: str, partitions: int) -> int:
    return fnv1a64(doc_id.encode("utf-8")) % partitions


@dataclass(frozen=True)
class ExecConfig:
    workers: int = 1
    partitions: int = 1

    def __post_init__(self):
        for name in ("workers", "partitions"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass
class PartitionedStore:
    """Per-partition binding environments sharing one set of names."""

    partitions: List[Dict[str, AnnotationDataset]]
    names: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.partitions)

    def counts(self) -> List[int]:
        return [sum(len(ds) for ds in part.values()) for part in self.partitions]

    def total(self) -> int:
        return sum(self.counts())


def partition(env: Mapping[str, AnnotationDataset], cfg: ExecConfig) -> PartitionedStore:
    n = cfg.partitions
    names = tuple(env)
    slot_cache: Dict[str, int] = {}
    buckets: List[Dict[str, dict]] = [{name: {} for name in names} for _ in range(n)]
    for name, ds in env.items():
        for doc, recs in ds.groups().items():
            slot = slot_cache.get(doc)
            if slot is None:
                slot = slot_cache[doc] = partition_of(doc, n)
            # documents arrive in ascending order, so each bucket stays canonical
            buckets[slot][name][doc] = recs
    parts = [{name: AnnotationDataset._from_groups(b[name]) for name in names} for b in buckets]
    return PartitionedStore(parts, names)


@dataclass
class SkewReport:
    counts: List[int]
    max_mean: float
    max_median: float

    @property
    def total(self) -> int:
        return sum(self.counts)


def skew(store: PartitionedStore) -> SkewReport:
    counts = store.counts()
    mean = sum(counts) / len(counts) if counts else 0.0
    median = statistics.median(counts) if counts else 0.0
    top = max(counts) if counts else 0
    return SkewReport(
        counts=counts,
        max_mean=top / mean if mean else 0.0,
        max_median=top / median if median else (float("inf") if top else 0.0),
    )


@dataclass
class TaskTiming:
    partition: int
    start: float
    end: float
    cpu: float
    count: int
    pid: int

    @property
    def seconds(self) -> float:
        return self.end - self.start


@dataclass
class ExecMetrics:
    wall: float
    tasks: List[TaskTiming] = field(default_factory=list)
    workers: int = 1

    @property
    def task_times(self) -> List[float]:
        return [t.seconds for t in sorted(self.tasks, key=lambda t: t.partition)]

    @property
    def partition_counts(self) -> List[int]:
        return [t.count for t in sorted(self.tasks, key=lambda t: t.partition)]

    @property
    def slowest_task(self) -> float:
        return max((t.seconds for t in self.tasks), default=0.0)

    @property
    def peak_concurrency(self) -> int:
        events = []
        for t in self.tasks:
            events.append((t.start, 1))
            events.append((t.end, -1))
        # ends sort before starts at equal timestamps
        events.sort(key=lambda e: (e[0], e[1]))
        peak = cur = 0
        for _, delta in events:
            cur += delta
            peak = max(peak, cur)
        return peak


def merge(results: Sequence, anchored: bool):
    """Combine per-partition results into one canonically ordered result.

    Documents never span partitions, so ordering whole documents by docId is
    enough; no record is touched individually.
    """
    if anchored:
        return sorted(chain.from_iterable(results), key=lambda m: canonical_key(m.anchor))
    if len(results) == 1:
        return results[0]
    groups = [item for res in results for item in res.groups().items()]
    groups.sort(key=itemgetter(0))
    return AnnotationDataset._from_groups(dict(groups))


def _run_partition(part: Mapping[str, AnnotationDataset], node: Expr, index: int):
    t0 = time.monotonic()
    c0 = time.process_time()
    result = evaluate(node, part)
    c1 = time.process_time()
    t1 = time.monotonic()
    return result, TaskTiming(index, t0, t1, c1 - c0, len(result), os.getpid())


_SUBSET_OPS = frozenset({
    "FilterSet", "FilterType", "FilterProperty", "RegexProperty", "Contains",
    "ContainedIn", "Before", "After", "Between", "MatchProperty",
})


def source_dataset(node: Expr) -> Optional[str]:
    """Name of the bound dataset every result record is drawn from, if any."""
    while isinstance(node, Call):
        if node.op not in _SUBSET_OPS:
            return None
        node = node.args[0]
    return node.name if isinstance(node, Ref) else None


# (partition, dataset name) -> {id(record): position}
Positions = Dict[Tuple[int, str], Dict[int, int]]


def _encode(result, node: Expr, index: int, positions: Positions):
    # subset results travel as positions into the partition both sides share
    src = source_dataset(node)
    if src is None:
        return ("raw", result)
    pos = positions[(index, src)]
    idx = array("Q", map(pos.__getitem__, map(id, result)))
    docs = [(doc, len(recs)) for doc, recs in result.groups().items()]
    return ("ref", src, idx.tobytes(), docs)


def _decode(payload, part: Mapping[str, AnnotationDataset]):
    if payload[0] == "raw":
        return payload[1]
    _, src, raw, docs = payload
    idx = array("Q")
    idx.frombytes(raw)
    recs = list(map(part[src].records.__getitem__, idx))
    groups = {}
    i = 0
    for doc, n in docs:
        groups[doc] = recs[i:i + n]
        i += n
    return AnnotationDataset._from_groups(groups)


def _worker_main(conn, store: PartitionedStore, positions: Positions, cursor) -> None:
    """Serve queries until told to stop.

    ``cursor`` is the shared queue: each worker claims the next partition
    index under its lock, so a slow partition delays only its own worker.
    Results for one query go back to the parent in a single message.
    """
    n = len(store.partitions)
    while True:
        try:
            node = conn.recv()
        except EOFError:
            return
        if node is None:
            return
        done = []
        try:
            while True:
                with cursor.get_lock():
                    index = cursor.value
                    cursor.value = index + 1
                if index >= n:
                    break
                result, timing = _run_partition(store.partitions[index], node, index)
                done.append((_encode(result, node, index, positions), timing))
        except Exception as exc:  # noqa: BLE001 - shipped to the parent
            with cursor.get_lock():
                cursor.value = n  # stop the other workers claiming more
            try:
                conn.send(("error", exc))
            except Exception:  # noqa: BLE001 - unpicklable exception
                conn.send(("error", RuntimeError(repr(exc))))
            continue
        conn.send(("ok", done))


class Executor:
    """Runs queries over one PartitionedStore with a fixed worker count.

    With more than one worker, forked worker processes are started lazily
    and kept until :meth:`close`, so repeated runs do not pay start-up.
    """

    def __init__(self, store: PartitionedStore, workers: int = 1):
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise ValueError("workers must be a positive integer")
        self.store = store
        self.workers = workers
        self._procs: list = []
        self._conns: list = []
        self._cursor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        for conn in self._conns:
            try:
                conn.send(None)
            except OSError:
                pass
        for proc in self._procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
                proc.join()
        for conn in self._conns:
            conn.close()
        self._procs, self._conns, self._cursor = [], [], None

    def _start(self):
        if self._procs:
            return
        ctx = multiprocessing.get_context("fork")
        positions = {
            (i, name): {id(a): k for k, a in enumerate(ds.records)}
            for i, part in enumerate(self.store.partitions)
            for name, ds in part.items()
        }
        self._cursor = ctx.Value("q", 0)
        # keep the children's collector off the inherited heap: a full
        # collection there would touch, and so copy, every shared page
        gc.freeze()
        try:
            for _ in range(self.workers):
                parent, child = ctx.Pipe()
                proc = ctx.Process(target=_worker_main, args=(child, self.store, positions, self._cursor),
                                   daemon=True)
                proc.start()
                child.close()
                self._procs.append(proc)
                self._conns.append(parent)
        finally:
            gc.unfreeze()

    def _run_parallel(self, node: Expr) -> list:
        self._cursor.value = 0
        for conn in self._conns:
            conn.send(node)
        outs, error = [], None
        for conn in self._conns:
            try:
                status, body = conn.recv()
            except EOFError:
                status, body = "error", RuntimeError("worker process exited unexpectedly")
            if status == "error":
                error = error or body
            else:
                outs.extend(body)
        if error is not None:
            raise error
        parts = self.store.partitions
        return [(_decode(payload, parts[timing.partition]), timing) for payload, timing in outs]

    def run(self, node) -> Tuple[object, ExecMetrics]:
        if isinstance(node, str):
            node = parse(node)
        check(node, self.store.names)
        anchored = is_anchored(node)
        if self.workers > 1:
            self._start()
        t0 = time.monotonic()
        if self.workers == 1:
            outs = [_run_partition(p, node, i) for i, p in enumerate(self.store.partitions)]
        else:
            outs = self._run_parallel(node)
        outs.sort(key=lambda o: o[1].partition)
        result = merge([o[0] for o in outs], anchored)
        wall = time.monotonic() - t0
        return result, ExecMetrics(wall=wall, tasks=[o[1] for o in outs], workers=self.workers)


def execute(node, store: PartitionedStore, cfg: ExecConfig):
    """One-shot execution; returns ``(result, ExecMetrics)``."""
    with Executor(store, cfg.workers) as ex:
        return ex.run(node)
