import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annoq.model import Annotation, AnnotationDataset, DatasetError, canonical_key, normalize, stats, validate
from annoq.storage import dumps
from conftest import SAMPLE, random_dataset


def test_sample_record_is_valid():
    assert validate(SAMPLE) == []
    assert SAMPLE.length == 11


def test_zero_length_is_valid():
    assert validate(Annotation("d", "s", "t", 5, 5, 0)) == []


def test_negative_length_is_a_violation():
    assert validate(Annotation("d", "s", "t", 10, 3, 0)) == ["negative length"]


@pytest.mark.parametrize("record, fragment", [
    (Annotation("", "s", "t", 0, 1, 0), "doc_id"),
    (Annotation("d", "s\tx", "t", 0, 1, 0), "annot_set"),
    (Annotation("d", "s", "t\n", 0, 1, 0), "annot_type"),
    (Annotation("d", "s", "t", -1, 1, 0), "start_offset"),
    (Annotation("d", "s", "t", 0, 1, -4), "annot_id"),
    (Annotation("d", "s", "t", 0, 1, 0, {"k": 3}), "property"),
])
def test_each_violation_is_reported(record, fragment):
    problems = validate(record)
    assert len(problems) == 1
    assert fragment in problems[0]


def test_several_violations_are_all_listed():
    assert len(validate(Annotation("", "", "t", 4, 2, -1))) == 4


def test_normalize_empty():
    assert len(normalize([])) == 0


def test_normalize_drops_duplicates():
    a = Annotation("d", "s", "t", 0, 3, 1, {"k": "v"})
    assert normalize([a, Annotation("d", "s", "t", 0, 3, 1, {"k": "v"})]).records == (a,)


def test_normalize_treats_empty_properties_as_absent():
    a = Annotation("d", "s", "t", 0, 3, 1, {})
    b = Annotation("d", "s", "t", 0, 3, 1)
    assert normalize([a, b]).records == (b,)


def test_normalize_sorts_shuffled_records():
    rng = random.Random(5)
    recs = list(random_dataset(rng, 200, docs=5).records)
    shuffled = recs[:]
    rng.shuffle(shuffled)
    # independent comparator: explicit six-key tuple sort
    expected = sorted(recs, key=lambda a: (a[0], a[3], a[4], a[1], a[2], a[5]))
    assert list(normalize(shuffled).records) == expected


def test_normalize_reports_invalid_record_position():
    with pytest.raises(DatasetError) as err:
        normalize([Annotation("d", "s", "t", 0, 1, 0), Annotation("d", "s", "t", 9, 1, 1)])
    assert err.value.position == 1


def test_conflicting_ids_in_one_document_rejected():
    with pytest.raises(DatasetError, match="not unique"):
        normalize([Annotation("d", "s", "t", 0, 1, 7), Annotation("d", "s", "u", 2, 4, 7)])


def test_same_id_in_different_documents_allowed():
    assert len(normalize([Annotation("d1", "s", "t", 0, 1, 7), Annotation("d2", "s", "t", 0, 1, 7)])) == 2


def test_stats():
    assert stats([]).total == 0 and stats([]).documents == 0
    st1 = stats([SAMPLE])
    assert (st1.total, st1.documents, st1.by_set_type) == (1, 1, {("ge", "NP"): 1})


def test_groups_are_contiguous_docs():
    ds = random_dataset(random.Random(1), 100, docs=7)
    groups = ds.groups()
    assert list(groups) == sorted(groups)
    assert [a for recs in groups.values() for a in recs] == list(ds.records)


record_strategy = st.builds(
    Annotation,
    st.sampled_from(["d1", "d2", "d3"]),
    st.sampled_from(["om", "genia"]),
    st.sampled_from(["word", "sentence"]),
    st.integers(0, 30),
    st.integers(0, 30),
    st.integers(0, 50),
    st.one_of(st.none(), st.dictionaries(st.sampled_from(["orig", "pos"]), st.text(max_size=3), max_size=2)),
).filter(lambda a: a.end_offset >= a.start_offset)


def _unique_ids(records):
    seen, out = set(), []
    for a in records:
        if (a.doc_id, a.annot_id) not in seen:
            seen.add((a.doc_id, a.annot_id))
            out.append(a)
    return out


@settings(max_examples=200, deadline=None)
@given(st.lists(record_strategy, max_size=30).map(_unique_ids))
def test_normalize_properties(records):
    d = normalize(records)
    assert all(validate(a) == [] for a in d)
    assert dumps(normalize(d)) == dumps(d)
    keys = [canonical_key(a) for a in d]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


@given(record_strategy, record_strategy, record_strategy)
def test_canonical_order_is_total(a, b, c):
    ka, kb, kc = canonical_key(a), canonical_key(b), canonical_key(c)
    assert (ka < kb) + (kb < ka) + (ka == kb) == 1
    if ka <= kb <= kc:
        assert ka <= kc


def test_dataset_equality_and_immutability():
    d = AnnotationDataset([SAMPLE])
    assert d == AnnotationDataset([SAMPLE])
    with pytest.raises(AttributeError):
        d.records = ()
