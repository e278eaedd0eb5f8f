import random

import pytest
import re2
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from annoq import algebra
from annoq.errors import PatternError
from annoq.model import Annotation, AnnotationDataset
from conftest import SAMPLE, random_dataset


def D(*spans, doc="d", annot_set="s", annot_type="t", base=0):
    return AnnotationDataset(
        [Annotation(doc, annot_set, annot_type, s, e, base + k) for k, (s, e) in enumerate(spans)])


def ids(ds):
    # annotIds are unique per document, so the six identity fields key a record
    return {a.identity() for a in ds}


def spans(ds):
    return [(a.start_offset, a.end_offset) for a in ds]


def _pair(seed, n=60, docs=4):
    rng = random.Random(seed)
    a = random_dataset(rng, rng.randrange(n), docs=docs, annot_set="a")
    b = random_dataset(rng, rng.randrange(n), docs=docs, annot_set="b", id_base=1000)
    return a, b


# -- documented examples ---------------------------------------------------

def test_filter_set_sample_record():
    assert list(algebra.filter_set(AnnotationDataset([SAMPLE]), "ge")) == [SAMPLE]
    assert len(algebra.filter_set(AnnotationDataset([SAMPLE]), "nosuch")) == 0


def test_filter_type_sample_record():
    assert list(algebra.filter_type(AnnotationDataset([SAMPLE]), "NP")) == [SAMPLE]
    assert len(algebra.filter_type(AnnotationDataset([SAMPLE]), "")) == 0


def test_filter_property_sample_record():
    assert list(algebra.filter_property(AnnotationDataset([SAMPLE]), "pos", "jj nns")) == [SAMPLE]
    assert len(algebra.filter_property(D((0, 3)), "pos", "jj nns")) == 0


def test_regex_property_prefix(small_corpus):
    genia = small_corpus.env["genia"]
    got = algebra.regex_property(genia, "orig", "^he.*")
    assert got.records and all(a.prop("orig").startswith("he") for a in got)


@pytest.mark.parametrize("pattern", ["x{", "(", "a{2,1}", "{3}", "[a"])
def test_bad_patterns_raise(pattern):
    with pytest.raises(PatternError):
        algebra.regex_property(D((0, 1)), "orig", pattern)


def test_bad_pattern_raises_before_scanning():
    before = algebra.SCAN_VISITS["RegexProperty"]
    with pytest.raises(PatternError):
        algebra.regex_property(D((0, 1), (2, 3)), "orig", "x{")
    assert algebra.SCAN_VISITS["RegexProperty"] == before


@pytest.mark.parametrize("pattern", ["x\\{", "a{2}", "a{2,}", "a{1,3}", "[{]"])
def test_valid_brace_patterns_compile(pattern):
    algebra.compile_pattern(pattern)


def test_contains_strict_nesting():
    assert spans(algebra.contains(D((0, 10)), D((2, 5), base=10))) == [(0, 10)]


def test_contains_inclusive_boundaries():
    assert spans(algebra.contains(D((2, 5)), D((2, 5), base=10))) == [(2, 5)]


def test_contains_excludes_self():
    a = D((2, 5))
    assert len(algebra.contains(a, a)) == 0
    assert len(algebra.contained_in(a, a)) == 0


def test_contained_in():
    assert spans(algebra.contained_in(D((2, 5)), D((0, 10), base=10))) == [(2, 5)]
    assert len(algebra.contained_in(D((2, 5)), D((0, 10), doc="other"))) == 0


def test_before_adjacency_and_overlap():
    assert spans(algebra.before(D((0, 5)), D((5, 9), base=10))) == [(0, 5)]
    assert len(algebra.before(D((0, 5)), D((3, 9), base=10))) == 0


def test_after_mirror():
    assert spans(algebra.after(D((5, 9)), D((0, 5), base=10))) == [(5, 9)]
    assert len(algebra.after(D((3, 9)), D((0, 5), base=10))) == 0


def test_between():
    assert spans(algebra.between(D((3, 5)), D((0, 2), base=10), D((6, 9), base=20))) == [(3, 5)]


def test_sequence_single_pair():
    out = algebra.sequence(D((0, 3)), D((5, 9), base=10), dist=10)
    assert [(a.annot_set, a.annot_type, a.start_offset, a.end_offset, a.properties) for a in out] == [
        ("aq", "seq", 0, 9, None)]
    assert out[0].annot_id == 11


def test_sequence_dist_too_small():
    assert len(algebra.sequence(D((0, 3)), D((5, 9), base=10), dist=1)) == 0


@pytest.mark.parametrize("dist", [0, -1, True, 1.5])
def test_sequence_rejects_bad_dist(dist):
    with pytest.raises(ValueError):
        algebra.sequence(D((0, 3)), D((5, 9)), dist=dist)


def test_match_property_scoping():
    heart = {"orig": "heart"}
    a = AnnotationDataset([Annotation("d1", "g", "word", 0, 5, 1, heart)])
    b_same = AnnotationDataset([Annotation("d1", "g", "word", 9, 14, 2, heart)])
    b_other = AnnotationDataset([Annotation("d2", "g", "word", 9, 14, 2, heart)])
    assert list(algebra.match_property(a, b_same, "orig")) == list(a)
    assert len(algebra.match_property(a, b_other, "orig")) == 0


def test_preceding_nearest_first():
    out = algebra.preceding(D((0, 2), (3, 5), (6, 9)), D((10, 12), base=10), cnt=2)
    assert len(out) == 1
    assert spans(out[0].matches) == [(6, 9), (3, 5)]


def test_following_nearest_first():
    out = algebra.following(D((3, 5), (6, 9), (10, 12), base=10), D((0, 2)), cnt=2)
    assert spans(out[0].matches) == [(3, 5), (6, 9)]


@pytest.mark.parametrize("op", [algebra.preceding, algebra.following])
def test_anchored_with_empty_a(op):
    out = op(AnnotationDataset(), D((0, 2), (5, 7)))
    assert [m.matches for m in out] == [(), ()]


@pytest.mark.parametrize("op", [algebra.preceding, algebra.following])
def test_anchored_default_cnt_and_bad_cnt(op):
    a = D(*[(k * 3, k * 3 + 2) for k in range(10)], base=0)
    anchor = D((14, 15), base=100)
    assert len(op(a, anchor)[0].matches) == 3
    with pytest.raises(ValueError):
        op(a, anchor, cnt=0)


# -- oracle equivalence ----------------------------------------------------

BINARY = [
    ("contains", algebra.contains, oracle.contains),
    ("contained_in", algebra.contained_in, oracle.contained_in),
    ("before", algebra.before, oracle.before),
    ("after", algebra.after, oracle.after),
]


@pytest.mark.parametrize("seed", range(40))
def test_oracle_equivalence_all_ops(seed):
    a, b = _pair(seed)
    c = random_dataset(random.Random(seed + 10_000), 40, docs=4, annot_set="c", id_base=5000)
    A, B, C = list(a), list(b), list(c)
    for _, op, ref in BINARY:
        assert list(op(a, b)) == ref(A, B)
        assert list(op(a, a)) == ref(A, A)
    assert list(algebra.between(c, a, b)) == oracle.between(C, A, B)
    assert list(algebra.filter_set(a, "a")) == oracle.filter_set(A, "a")
    assert list(algebra.filter_type(a, "t")) == oracle.filter_type(A, "t")
    assert list(algebra.filter_property(a, "orig", "heart")) == oracle.filter_property(A, "orig", "heart")
    assert list(algebra.regex_property(a, "orig", "^he.*")) == oracle.regex_property(A, "orig", "^he.*", engine=re2)
    assert list(algebra.match_property(a, b, "orig")) == oracle.match_property(A, B, "orig")
    for dist in (None, 1, 20):
        got = algebra.sequence(a, b, dist)
        assert {(x.doc_id, x.start_offset, x.end_offset) for x in got} == oracle.sequence_spans(A, B, dist)
        assert list(got) == oracle.sequence(A, B, dist)
    for cnt in (1, 3, 7):
        assert [tuple(m) for m in algebra.preceding(a, b, cnt)] == oracle.preceding(A, B, cnt)
        assert [tuple(m) for m in algebra.following(a, b, cnt)] == oracle.following(A, B, cnt)


def test_oracle_equivalence_with_heavy_ties():
    # few distinct offsets force many identical spans across types and ids
    rng = random.Random(99)
    a = random_dataset(rng, 300, docs=2, max_offset=6, types=("t", "u", "v"))
    b = random_dataset(rng, 300, docs=2, max_offset=6, annot_set="b", id_base=1000)
    A, B = list(a), list(b)
    for _, op, ref in BINARY:
        assert list(op(a, b)) == ref(A, B)
    assert [tuple(m) for m in algebra.preceding(a, b, 5)] == oracle.preceding(A, B, 5)
    assert [tuple(m) for m in algebra.following(a, b, 5)] == oracle.following(A, B, 5)


# -- invariants ------------------------------------------------------------

SUBSET_OPS = [
    lambda a, b: algebra.filter_set(a, "a"),
    lambda a, b: algebra.filter_type(a, "u"),
    lambda a, b: algebra.filter_property(a, "orig", "the"),
    lambda a, b: algebra.regex_property(a, "orig", "e"),
    algebra.contains,
    algebra.contained_in,
    algebra.before,
    algebra.after,
    lambda a, b: algebra.between(a, b, b),
    lambda a, b: algebra.match_property(a, b, "orig"),
]

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, len(SUBSET_OPS) - 1))
def test_subset_closure_and_monotonicity(seed, k):
    op = SUBSET_OPS[k]
    a, b = _pair(seed)
    rng = random.Random(seed ^ 0xABC)
    a_sub = AnnotationDataset([x for x in a if rng.random() < 0.5])
    full = op(a, b)
    assert ids(full) <= ids(a)
    assert len(ids(full)) == len(full)
    assert ids(op(a_sub, b)) <= ids(full)


@pytest.mark.parametrize("op", SUBSET_OPS)
def test_empty_first_argument(op):
    _, b = _pair(3)
    assert len(op(AnnotationDataset(), b)) == 0


def test_empty_first_argument_for_constructors():
    _, b = _pair(3)
    empty = AnnotationDataset()
    assert len(algebra.sequence(empty, b)) == 0
    assert algebra.preceding(b, empty) == []
    assert algebra.following(b, empty) == []


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_between_is_after_and_before(seed):
    a, b = _pair(seed)
    c = random_dataset(random.Random(seed + 1), 40, docs=4, annot_set="c", id_base=5000)
    expected = ids(algebra.after(c, a)) & ids(algebra.before(c, b))
    assert ids(algebra.between(c, a, b)) == expected


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_operators_are_document_local(seed):
    a, b = _pair(seed)
    for op in (algebra.contains, algebra.contained_in, algebra.before, algebra.after):
        whole = op(a, b)
        per_doc = []
        for doc in a.doc_ids():
            a_doc = AnnotationDataset([x for x in a if x.doc_id == doc])
            b_doc = AnnotationDataset([x for x in b if x.doc_id == doc])
            per_doc.extend(op(a_doc, b_doc))
        assert list(whole) == per_doc


def test_containment_composition(small_corpus):
    om, genia = small_corpus.env["om"], small_corpus.env["genia"]
    heart = algebra.filter_property(genia, "orig", "heart")
    sentence = algebra.filter_type(om, "ce:sentence")
    abstract = algebra.filter_type(om, "ce:abstract")
    nested = algebra.contained_in(heart, algebra.contained_in(sentence, abstract))
    assert ids(nested) <= ids(algebra.contained_in(heart, sentence))


def test_filters_visit_every_record():
    a, _ = _pair(1, n=200)
    before = algebra.SCAN_VISITS["FilterProperty"]
    algebra.filter_property(a, "orig", "adrenocortical")
    assert algebra.SCAN_VISITS["FilterProperty"] - before == len(a)
