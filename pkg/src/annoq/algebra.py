"""The thirteen region-algebra operators.

Every binary operator pairs annotations only inside one document. Filters and
joins return a subset of their first argument in canonical order, each record
at most once. ``sequence`` builds new regions and ``preceding``/``following``
return anchored neighbour lists instead of a dataset.

Interval rules:

* containment is inclusive on both ends, but a record never matches itself;
* ``before``/``after`` accept adjacency (a gap of zero);
* ``sequence`` without ``dist`` enumerates every ordered pair in a document and
  is quadratic in the worst case.
"""

from __future__ import annotations

import functools
import re
from bisect import bisect_left, bisect_right
from collections import Counter
from typing import Dict, List, NamedTuple, Optional, Tuple

import re2

from .errors import PatternError
from .model import Annotation, AnnotationDataset

SEQ_SET = "aq"
SEQ_TYPE = "seq"
DEFAULT_NEIGHBOURS = 3

# records visited per operator, per process; used to show filters are full scans
SCAN_VISITS: Counter = Counter()


class AnchoredMatches(NamedTuple):
    anchor: Annotation
    matches: Tuple[Annotation, ...]


_REPEAT = re.compile(r"\{\d+(,\d*)?\}")


def _check_braces(pattern: str) -> None:
    # RE2 treats a stray "{" as a literal; this dialect requires it escaped
    i, n = 0, len(pattern)
    in_class = False
    while i < n:
        ch = pattern[i]
        if ch == "\\":
            i += 2
            continue
        if in_class:
            if ch == "]":
                in_class = False
        elif ch == "[":
            in_class = True
            i += 1
            if i < n and pattern[i] == "^":
                i += 1
            if i < n and pattern[i] == "]":
                i += 1
            continue
        elif ch == "{":
            if _REPEAT.match(pattern, i) is None:
                raise PatternError(f"malformed repetition in pattern {pattern!r} at char {i}")
            if i == 0 or pattern[i - 1] in "(|":
                raise PatternError(f"repetition has nothing to repeat in pattern {pattern!r}")
        i += 1


@functools.lru_cache(maxsize=256)
def compile_pattern(pattern: str):
    """Compile a property regex under the linear-time RE2 dialect."""
    if not isinstance(pattern, str):
        raise PatternError("pattern must be text")
    _check_braces(pattern)
    try:
        return re2.compile(pattern)
    except re2.error as exc:
        raise PatternError(f"invalid pattern {pattern!r}: {exc}") from None


def _ds(groups: Dict[str, list]) -> AnnotationDataset:
    return AnnotationDataset._from_groups(groups)


def filter_set(A: AnnotationDataset, set_name: str) -> AnnotationDataset:
    SCAN_VISITS["FilterSet"] += len(A)
    out = {}
    for doc, recs in A.groups().items():
        sel = [a for a in recs if a.annot_set == set_name]
        if sel:
            out[doc] = sel
    return _ds(out)


def filter_type(A: AnnotationDataset, type_name: str) -> AnnotationDataset:
    SCAN_VISITS["FilterType"] += len(A)
    out = {}
    for doc, recs in A.groups().items():
        sel = [a for a in recs if a.annot_type == type_name]
        if sel:
            out[doc] = sel
    return _ds(out)


def filter_property(A: AnnotationDataset, name: str, value: str) -> AnnotationDataset:
    SCAN_VISITS["FilterProperty"] += len(A)
    out = {}
    for doc, recs in A.groups().items():
        sel = [a for a in recs if (p := a.properties) and p.get(name) == value]
        if sel:
            out[doc] = sel
    return _ds(out)


def regex_property(A: AnnotationDataset, name: str, pattern: str) -> AnnotationDataset:
    search = compile_pattern(pattern).search
    SCAN_VISITS["RegexProperty"] += len(A)
    out = {}
    for doc, recs in A.groups().items():
        sel = [a for a in recs if (p := a.properties) and (v := p.get(name)) is not None and search(v)]
        if sel:
            out[doc] = sel
    return _ds(out)


def contains(A: AnnotationDataset, B: AnnotationDataset) -> AnnotationDataset:
    """Records of A whose region covers some other record of B."""
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        starts = [b.start_offset for b in recs_b]
        sel = []
        for a in recs_a:
            a_end = a.end_offset
            # only b starting inside a can be covered by it
            lo = bisect_left(starts, a.start_offset)
            hi = bisect_right(starts, a_end, lo)
            ident = a[:6]
            for k in range(lo, hi):
                b = recs_b[k]
                if b.end_offset <= a_end and b[:6] != ident:
                    sel.append(a)
                    break
        if sel:
            out[doc] = sel
    return _ds(out)


def contained_in(A: AnnotationDataset, B: AnnotationDataset) -> AnnotationDataset:
    """Records of A whose region is covered by some other record of B."""
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        starts = [b.start_offset for b in recs_b]
        # prefix maxima of end offset, plus the runner-up for identity exclusion
        best_end, best_idx, second_end = [], [], []
        best, idx, second = -1, -1, -1
        for k, b in enumerate(recs_b):
            e = b.end_offset
            if e > best:
                second, best, idx = best, e, k
            elif e > second:
                second = e
            best_end.append(best)
            best_idx.append(idx)
            second_end.append(second)
        sel = []
        for a in recs_a:
            i = bisect_right(starts, a.start_offset) - 1
            if i < 0:
                continue
            a_end = a.end_offset
            if best_end[i] >= a_end and (
                second_end[i] >= a_end or recs_b[best_idx[i]][:6] != a[:6]
            ):
                sel.append(a)
        if sel:
            out[doc] = sel
    return _ds(out)


def before(A: AnnotationDataset, B: AnnotationDataset) -> AnnotationDataset:
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        last_start = recs_b[-1].start_offset
        sel = [a for a in recs_a if a.end_offset <= last_start]
        if sel:
            out[doc] = sel
    return _ds(out)


def after(A: AnnotationDataset, B: AnnotationDataset) -> AnnotationDataset:
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        first_end = min(b.end_offset for b in recs_b)
        sel = [a for a in recs_a if a.start_offset >= first_end]
        if sel:
            out[doc] = sel
    return _ds(out)


def between(C: AnnotationDataset, A: AnnotationDataset, B: AnnotationDataset) -> AnnotationDataset:
    groups_a = A.groups()
    groups_b = B.groups()
    out = {}
    for doc, recs_c in C.groups().items():
        recs_a = groups_a.get(doc)
        recs_b = groups_b.get(doc)
        if not recs_a or not recs_b:
            continue
        first_end = min(a.end_offset for a in recs_a)
        last_start = recs_b[-1].start_offset
        sel = [c for c in recs_c if c.start_offset >= first_end and c.end_offset <= last_start]
        if sel:
            out[doc] = sel
    return _ds(out)


def sequence(A: AnnotationDataset, B: AnnotationDataset, dist: Optional[int] = None) -> AnnotationDataset:
    """New ``aq``/``seq`` regions spanning each a that ends before some b starts.

    ``dist`` bounds the character gap between a and b. One output region is
    produced per distinct span; ids continue from the largest annotId seen in
    that document across both inputs.
    """
    if dist is not None and (isinstance(dist, bool) or not isinstance(dist, int) or dist < 1):
        raise ValueError("dist must be a positive integer")
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        starts = [b.start_offset for b in recs_b]
        n_b = len(recs_b)
        spans = set()
        for a in recs_a:
            lo = bisect_left(starts, a.end_offset)
            hi = n_b if dist is None else bisect_right(starts, a.end_offset + dist, lo)
            a_start = a.start_offset
            for k in range(lo, hi):
                spans.add((a_start, recs_b[k].end_offset))
        if not spans:
            continue
        next_id = max(max(a.annot_id for a in recs_a), max(b.annot_id for b in recs_b))
        sel = []
        for start, end in sorted(spans):
            next_id += 1
            sel.append(Annotation(doc, SEQ_SET, SEQ_TYPE, start, end, next_id))
        out[doc] = sel
    return _ds(out)


def match_property(A: AnnotationDataset, B: AnnotationDataset, name: str) -> AnnotationDataset:
    groups_b = B.groups()
    out = {}
    for doc, recs_a in A.groups().items():
        recs_b = groups_b.get(doc)
        if not recs_b:
            continue
        values = {v for b in recs_b if (v := b.prop(name)) is not None}
        if not values:
            continue
        sel = [a for a in recs_a if a.prop(name) in values]
        if sel:
            out[doc] = sel
    return _ds(out)


def _check_cnt(cnt: int) -> None:
    if isinstance(cnt, bool) or not isinstance(cnt, int) or cnt < 1:
        raise ValueError("cnt must be a positive integer")


def preceding(A: AnnotationDataset, B: AnnotationDataset, cnt: int = DEFAULT_NEIGHBOURS) -> List[AnchoredMatches]:
    """For each anchor in B, up to ``cnt`` records of A ending at or before it starts.

    Matches are nearest first: descending end, then descending start, then
    ascending set, type and id.
    """
    _check_cnt(cnt)
    groups_a = A.groups()
    out: List[AnchoredMatches] = []
    current = None
    by_end: List[Annotation] = []
    neg_ends: List[int] = []
    for b in B.records:
        if b.doc_id != current:
            current = b.doc_id
            by_end = sorted(
                groups_a.get(current, ()),
                key=lambda a: (-a.end_offset, -a.start_offset, a.annot_set, a.annot_type, a.annot_id),
            )
            neg_ends = [-a.end_offset for a in by_end]
        pos = bisect_left(neg_ends, -b.start_offset)
        out.append(AnchoredMatches(b, tuple(by_end[pos:pos + cnt])))
    return out


def following(A: AnnotationDataset, B: AnnotationDataset, cnt: int = DEFAULT_NEIGHBOURS) -> List[AnchoredMatches]:
    """For each anchor in B, up to ``cnt`` records of A starting at or after it ends.

    Matches come in canonical order, which is nearest first here.
    """
    _check_cnt(cnt)
    groups_a = A.groups()
    out: List[AnchoredMatches] = []
    current = None
    recs_a: tuple = ()
    starts: List[int] = []
    for b in B.records:
        if b.doc_id != current:
            current = b.doc_id
            recs_a = tuple(groups_a.get(current, ()))
            starts = [a.start_offset for a in recs_a]
        pos = bisect_left(starts, b.end_offset)
        out.append(AnchoredMatches(b, recs_a[pos:pos + cnt]))
    return out
