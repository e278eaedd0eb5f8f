"""annoq command line: gen, query, bench, validate, stats.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import storage
from .bench import BenchError, report_csv, run_bench, table3_suite
from .engine import ExecConfig, Executor, partition
from .errors import QueryError
from .generator import CorpusSpec, generate, write_manifest
from .model import stats
from .query import check, is_anchored, parse


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer: {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return value


def default_workers() -> int:
    env = os.environ.get("ANNOQ_WORKERS")
    if env:
        try:
            return _positive_int(env)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"ANNOQ_WORKERS: {exc}") from None
    return os.cpu_count() or 1


def _exec_config(args) -> ExecConfig:
    workers = args.workers or default_workers()
    return ExecConfig(workers=workers, partitions=args.partitions or 4 * workers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annoq", description="Region-algebra queries over stand-off annotations.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic om/genia corpus")
    g.add_argument("--docs", type=_positive_int, required=True)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--sentences", type=_positive_int, default=12, help="mean sentences per document")
    g.add_argument("--tokens", type=_positive_int, default=15, help="mean tokens per sentence")
    g.add_argument("--genia-fraction", type=_fraction, default=0.9)
    g.add_argument("--vocab", type=_positive_int, default=5000)
    g.add_argument("--out", required=True)

    q = sub.add_parser("query", help="evaluate one query expression")
    q.add_argument("--corpus", required=True)
    q.add_argument("--expr", required=True)
    q.add_argument("--workers", type=_positive_int)
    q.add_argument("--partitions", type=_positive_int)
    q.add_argument("--out")
    q.add_argument("--format", choices=("tsv", "jsonl"))

    b = sub.add_parser("bench", help="run the benchmark query suite")
    b.add_argument("--corpus", required=True)
    b.add_argument("--suite", choices=("table3",), default="table3")
    b.add_argument("--workers", type=_positive_int)
    b.add_argument("--partitions", type=_positive_int)
    b.add_argument("--reps", type=_positive_int, default=3)
    b.add_argument("--out", required=True)
    b.add_argument("--json", help="also write the full report, with every run time, as JSON")

    for name in ("validate", "stats"):
        p = sub.add_parser(name)
        p.add_argument("--corpus", required=True)
    return parser


def cmd_gen(args) -> int:
    try:
        spec = CorpusSpec(
            doc_count=args.docs,
            sentences_per_doc_mean=args.sentences,
            tokens_per_sentence_mean=args.tokens,
            genia_fraction=args.genia_fraction,
            vocabulary_size=args.vocab,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    env, truth = generate(spec)
    storage.save_corpus(env, args.out)
    write_manifest(args.out, truth, spec)
    total = sum(len(ds) for ds in env.values())
    print(f"wrote {total} annotations for {spec.doc_count} documents to {args.out}")
    return 0


def annotation_json(a) -> dict:
    return {
        "docId": a.doc_id,
        "annotSet": a.annot_set,
        "annotType": a.annot_type,
        "startOffset": a.start_offset,
        "endOffset": a.end_offset,
        "annotId": a.annot_id,
        "properties": dict(a.properties) if a.properties else None,
    }


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n"


def cmd_query(args) -> int:
    try:
        node = parse(args.expr)
    except QueryError as exc:
        raise UsageError(str(exc)) from None
    anchored = is_anchored(node)
    fmt = args.format or ("jsonl" if anchored else "tsv")
    if anchored and fmt == "tsv":
        raise UsageError("Preceding/Following results can only be written as jsonl")
    cfg = _exec_config(args)
    env = storage.load_corpus(args.corpus)
    try:
        check(node, env)
    except QueryError as exc:
        raise UsageError(str(exc)) from None
    store = partition(env, cfg)
    with Executor(store, cfg.workers) as ex:
        result, _ = ex.run(node)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            if anchored:
                for m in result:
                    fh.write(_dump_line({"anchor": annotation_json(m.anchor),
                                         "matches": [annotation_json(a) for a in m.matches]}))
            elif fmt == "jsonl":
                for a in result:
                    fh.write(_dump_line(annotation_json(a)))
            else:
                fh.write(storage.dumps(result))
    print(len(result))
    return 0


def cmd_bench(args) -> int:
    cfg = _exec_config(args)
    env = storage.load_corpus(args.corpus)
    store = partition(env, cfg)
    try:
        report = run_bench(table3_suite(), store, cfg, reps=args.reps, corpus={"path": str(args.corpus)})
        code = 0
    except BenchError as exc:
        report = exc.report
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    text = report_csv(report)
    if not report.valid:
        text += f"# INVALID: {report.error}\n"
    Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    for rec in report.records:
        if rec.runs:
            print(f"{rec.name:<32} median {rec.median * 1000:10.2f} ms  count {rec.count}")
    print(f"workers={cfg.workers} partitions={cfg.partitions} skew max/mean={report.skew.max_mean:.2f}")
    return code


def cmd_validate(args) -> int:
    if not Path(args.corpus).is_dir():
        print(f"error: corpus directory not found: {args.corpus}", file=sys.stderr)
        return 1
    bad = 0
    for path, line, message in storage.scan_corpus(args.corpus):
        bad += 1
        where = f"{path}:{line}" if line is not None else f"{path}"
        print(f"{where}: {message}")
    if bad:
        print(f"{bad} violation(s)", file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_stats(args) -> int:
    env = storage.load_corpus(args.corpus)
    sizes = storage.corpus_bytes(args.corpus)
    print("set\tdocuments\tannotations\tbytes")
    for name, ds in env.items():
        st = stats(ds)
        print(f"{name}\t{st.documents}\t{st.total}\t{sizes.get(name, 0)}")
    print()
    print("set\ttype\tcount")
    for name, ds in env.items():
        for (s, t), n in stats(ds).by_set_type.items():
            print(f"{s}\t{t}\t{n}")
    return 0


COMMANDS = {"gen": cmd_gen, "query": cmd_query, "bench": cmd_bench, "validate": cmd_validate, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"annoq {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"annoq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
