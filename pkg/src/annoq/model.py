"""Annotation records, validation, canonical ordering and the dataset container."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import chain, groupby
from operator import attrgetter
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

_FORBIDDEN_LABEL_CHARS = ("\t", "\n", "\r")
_doc_key = attrgetter("doc_id")


class Annotation(NamedTuple):
    """One stand-off region over a document.

    Offsets index the gaps between characters, so ``end_offset - start_offset``
    is the region length. Zero-length regions are legal.
    """

    doc_id: str
    annot_set: str
    annot_type: str
    start_offset: int
    end_offset: int
    annot_id: int
    properties: Optional[Mapping[str, str]] = None

    @property
    def length(self) -> int:
        return self.end_offset - self.start_offset

    def prop(self, name: str) -> Optional[str]:
        props = self.properties
        return props.get(name) if props else None

    def identity(self) -> tuple:
        # every field except properties; two distinct records never share it
        return self[:6]


def canonical_key(a: Annotation) -> tuple:
    return (a.doc_id, a.start_offset, a.end_offset, a.annot_set, a.annot_type, a.annot_id)


def validate(a: Annotation) -> List[str]:
    """Return the list of violated record invariants (empty when valid)."""
    problems = []
    for name in ("doc_id", "annot_set", "annot_type"):
        value = getattr(a, name)
        if not isinstance(value, str) or not value:
            problems.append(f"{name} must be non-empty text")
        elif any(ch in value for ch in _FORBIDDEN_LABEL_CHARS):
            problems.append(f"{name} contains tab or line break")
    for name in ("start_offset", "end_offset", "annot_id"):
        value = getattr(a, name)
        if not isinstance(value, int) or isinstance(value, bool):
            problems.append(f"{name} must be an integer")
        elif value < 0:
            problems.append(f"{name} must be non-negative")
    if (
        isinstance(a.start_offset, int)
        and isinstance(a.end_offset, int)
        and a.end_offset < a.start_offset
    ):
        problems.append("negative length")
    if a.properties is not None:
        if not isinstance(a.properties, Mapping):
            problems.append("properties must be a mapping")
        elif not all(isinstance(k, str) and isinstance(v, str) for k, v in a.properties.items()):
            problems.append("property keys and values must be text")
    return problems


class DatasetError(ValueError):
    """Raised when records cannot form a valid dataset."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"record {position}: {message}"
        super().__init__(message)


class AnnotationDataset:
    """Immutable, canonically ordered collection of annotations.

    Records are held per document (docIds ascending, each document's records
    in canonical order), which is the layout every operator and the
    partitioner work from. The flat record tuple is built on first use.
    The constructor validates and normalizes; operators build results through
    the trusted constructors below.
    """

    __slots__ = ("_groups", "_len", "_records")

    def __init__(self, records: Iterable[Annotation] = ()):
        flat = normalize_records(list(records))
        self._groups = _group(flat)
        self._len = len(flat)
        self._records: Optional[Tuple[Annotation, ...]] = flat

    @classmethod
    def of(cls, records: Iterable[Annotation]) -> "AnnotationDataset":
        return cls(records)

    @classmethod
    def _trusted(cls, records: Sequence[Annotation]) -> "AnnotationDataset":
        # caller guarantees canonical order, validity and no duplicates
        return cls._from_groups(_group(records))

    @classmethod
    def _from_groups(cls, groups: Dict[str, Sequence[Annotation]]) -> "AnnotationDataset":
        # caller guarantees ascending docIds and non-empty canonical groups
        ds = cls.__new__(cls)
        ds._groups = groups
        ds._len = sum(map(len, groups.values()))
        ds._records = None
        return ds

    @property
    def records(self) -> Tuple[Annotation, ...]:
        if self._records is None:
            self._records = tuple(chain.from_iterable(self._groups.values()))
        return self._records

    def __len__(self) -> int:
        return self._len

    def __iter__(self) -> Iterator[Annotation]:
        return chain.from_iterable(self._groups.values())

    def __getitem__(self, i):
        return self.records[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnnotationDataset):
            return NotImplemented
        return self._len == other._len and self.records == other.records

    def __hash__(self):
        return hash(tuple(canonical_key(a) for a in self))

    def __repr__(self) -> str:
        return f"AnnotationDataset({self._len} records, {len(self._groups)} documents)"

    def groups(self) -> Dict[str, Sequence[Annotation]]:
        """docId -> that document's records in canonical order. Read-only."""
        return self._groups

    def doc_ids(self) -> List[str]:
        return list(self._groups)


def _group(records: Sequence[Annotation]) -> Dict[str, Sequence[Annotation]]:
    return {doc: list(recs) for doc, recs in groupby(records, key=_doc_key)}


def normalize_records(records: Sequence[Annotation]) -> Tuple[Annotation, ...]:
    out = []
    for pos, a in enumerate(records):
        if not isinstance(a, Annotation):
            raise DatasetError(f"not an Annotation: {a!r}", pos)
        problems = validate(a)
        if problems:
            raise DatasetError("; ".join(problems), pos)
        if a.properties is not None and not a.properties:
            a = a._replace(properties=None)
        out.append(a)
    out.sort(key=canonical_key)
    deduped: List[Annotation] = []
    seen: Dict[int, Annotation] = {}
    last_doc = None
    for a in out:
        if a.doc_id != last_doc:
            seen = {}
            last_doc = a.doc_id
        prior = seen.get(a.annot_id)
        if prior is not None:
            if prior == a:
                continue
            raise DatasetError(f"annotId {a.annot_id} is not unique in document {a.doc_id!r}")
        seen[a.annot_id] = a
        deduped.append(a)
    return tuple(deduped)


def normalize(d) -> AnnotationDataset:
    """Sort into canonical order and drop duplicate records. Idempotent."""
    if isinstance(d, AnnotationDataset):
        return AnnotationDataset(d.records)
    return AnnotationDataset(list(d))


@dataclass
class DatasetStats:
    total: int = 0
    documents: int = 0
    by_set_type: Dict[Tuple[str, str], int] = field(default_factory=dict)
    docs_by_set: Dict[str, int] = field(default_factory=dict)


def stats(d: Iterable[Annotation]) -> DatasetStats:
    counts: Counter = Counter()
    docs = set()
    docs_by_set: Dict[str, set] = {}
    total = 0
    for a in d:
        total += 1
        counts[(a.annot_set, a.annot_type)] += 1
        docs.add(a.doc_id)
        docs_by_set.setdefault(a.annot_set, set()).add(a.doc_id)
    return DatasetStats(
        total=total,
        documents=len(docs),
        by_set_type=dict(sorted(counts.items())),
        docs_by_set={k: len(v) for k, v in sorted(docs_by_set.items())},
    )
