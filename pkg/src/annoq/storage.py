"""Tab-separated annotation files and corpus directories.

One record per line, seven tab-separated fields::

    docId  annotSet  annotType  startOffset  endOffset  annotId  properties

The properties field holds ``key=value`` pairs joined by ``&``, sorted by key,
with ``% & = TAB LF CR`` percent-encoded inside keys and values. A corpus is a
directory with one subdirectory per annotation set holding ``*.tsv`` files.
"""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from .model import Annotation, AnnotationDataset, DatasetError, validate

_ENCODE = {"%": "%25", "&": "%26", "=": "%3D", "\t": "%09", "\n": "%0A", "\r": "%0D"}
_DECODE = {v: k for k, v in _ENCODE.items()}
_ENCODE_RE = re.compile("[%&=\t\n\r]")
_ESCAPE_RE = re.compile("%(..?)?")
_DIGITS_RE = re.compile(r"[0-9]+\Z")


class TsvFormatError(ValueError):
    def __init__(self, message: str, path=None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


def encode_text(s: str) -> str:
    return _ENCODE_RE.sub(lambda m: _ENCODE[m.group()], s)


def decode_text(s: str) -> str:
    if "%" not in s:
        return s

    def repl(m):
        code = m.group().upper()
        if code not in _DECODE:
            raise ValueError(f"invalid percent-escape {m.group()!r}")
        return _DECODE[code]

    return _ESCAPE_RE.sub(repl, s)


def encode_properties(props: Optional[Mapping[str, str]]) -> str:
    if not props:
        return ""
    return "&".join(f"{encode_text(k)}={encode_text(v)}" for k, v in sorted(props.items()))


def decode_properties(field: str) -> Optional[Dict[str, str]]:
    if not field:
        return None
    props = {}
    for pair in field.split("&"):
        key, sep, value = pair.partition("=")
        if not sep or "=" in value:
            raise ValueError(f"malformed property pair {pair!r}")
        key = decode_text(key)
        if key in props:
            raise ValueError(f"duplicate property key {key!r}")
        props[key] = decode_text(value)
    return props


def format_record(a: Annotation) -> str:
    return "\t".join((
        a.doc_id, a.annot_set, a.annot_type,
        str(a.start_offset), str(a.end_offset), str(a.annot_id),
        encode_properties(a.properties),
    ))


def parse_record(line: str) -> Annotation:
    fields = line.split("\t")
    if len(fields) != 7:
        raise ValueError(f"expected 7 tab-separated fields, found {len(fields)}")
    doc, aset, atype, start, end, ident, props = fields
    for name, value in (("startOffset", start), ("endOffset", end), ("annotId", ident)):
        if not _DIGITS_RE.match(value):
            raise ValueError(f"{name} is not a non-negative integer: {value!r}")
    a = Annotation(doc, aset, atype, int(start), int(end), int(ident), decode_properties(props))
    problems = validate(a)
    if problems:
        raise ValueError("; ".join(problems))
    return a


def dumps(d: AnnotationDataset) -> str:
    return "".join(format_record(a) + "\n" for a in d.records)


def save_tsv(d: AnnotationDataset, path) -> None:
    if not isinstance(d, AnnotationDataset):
        d = AnnotationDataset(list(d))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in d.records:
            fh.write(format_record(a))
            fh.write("\n")


def iter_tsv(path) -> Iterator[Tuple[int, Annotation]]:
    """Yield ``(line_number, record)``; raise TsvFormatError naming the line."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.endswith("\n"):
                line = line[:-1]
            try:
                yield lineno, parse_record(line)
            except ValueError as exc:
                raise TsvFormatError(str(exc), path, lineno) from None


def _dataset(records, path) -> AnnotationDataset:
    try:
        return AnnotationDataset(records)
    except DatasetError as exc:
        raise TsvFormatError(str(exc), path) from None


def load_tsv(path) -> AnnotationDataset:
    return _dataset([a for _, a in iter_tsv(path)], path)


def set_files(set_dir: Path) -> List[Path]:
    return sorted(p for p in set_dir.glob("*.tsv") if p.is_file())


def set_dirs(root) -> List[Path]:
    root = Path(root)
    return sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))


def load_set(set_dir: Path) -> AnnotationDataset:
    records = []
    for path in set_files(set_dir):
        for lineno, a in iter_tsv(path):
            if a.annot_set != set_dir.name:
                raise TsvFormatError(
                    f"annotSet {a.annot_set!r} does not match directory {set_dir.name!r}", path, lineno
                )
            records.append(a)
    return _dataset(records, set_dir)


def load_corpus(root) -> Dict[str, AnnotationDataset]:
    """One binding per set subdirectory, named after it."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    return {d.name: load_set(d) for d in set_dirs(root)}


def save_corpus(env: Mapping[str, AnnotationDataset], root, filename: str = "part-00000.tsv") -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for name, ds in env.items():
        bad = next((a for a in ds.records if a.annot_set != name), None)
        if bad is not None:
            raise ValueError(f"dataset {name!r} holds a record of set {bad.annot_set!r}")
        (root / name).mkdir(exist_ok=True)
        save_tsv(ds, root / name / filename)


def scan_corpus(root) -> Iterator[Tuple[Path, Optional[int], str]]:
    """Yield every problem in a corpus directory as ``(file, line, message)``.

    Unlike :func:`load_corpus` this keeps going after the first bad line.
    """
    for set_dir in set_dirs(root):
        seen: Dict[Tuple[str, int], Tuple[Path, int, Annotation]] = {}
        for path in set_files(set_dir):
            try:
                fh = open(path, "r", encoding="utf-8", newline="")
            except OSError as exc:
                yield path, None, f"unreadable: {exc}"
                continue
            with fh:
                try:
                    lines = list(enumerate(fh, 1))
                except UnicodeDecodeError as exc:
                    yield path, None, f"not UTF-8: {exc}"
                    continue
            for lineno, line in lines:
                if line.endswith("\n"):
                    line = line[:-1]
                try:
                    a = parse_record(line)
                except ValueError as exc:
                    yield path, lineno, str(exc)
                    continue
                if a.annot_set != set_dir.name:
                    yield path, lineno, f"annotSet {a.annot_set!r} does not match directory {set_dir.name!r}"
                key = (a.doc_id, a.annot_id)
                prior = seen.get(key)
                if prior is not None and prior[2] != a:
                    yield path, lineno, (
                        f"annotId {a.annot_id} already used in document {a.doc_id!r} "
                        f"at {prior[0]}:{prior[1]}"
                    )
                elif prior is None:
                    seen[key] = (path, lineno, a)


def corpus_bytes(root) -> Dict[str, int]:
    return {d.name: sum(os.path.getsize(p) for p in set_files(d)) for d in set_dirs(root)}
