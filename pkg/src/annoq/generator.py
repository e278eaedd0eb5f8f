"""Deterministic synthetic om/genia corpora.

Every random choice comes from one splitmix64 stream, consumed per document in
this order:

1. one draw: does the document get genia annotations (``u < genia_fraction``)
2. one draw: sentence count, uniform in ``[1, 2*mean - 1]``
3. per sentence: one draw for its token count (uniform ``[1, 2*mean - 1]``),
   then exactly one Zipf draw per token for its ``orig`` word
4. paragraph runs: one draw per run, run length uniform in ``[1, 4]``
5. genia documents only, per sentence, walking the tokens: one draw picks NP
   (1/4), VP (1/4) or skip; an NP/VP takes one more draw for its length
   ``[1, 3]``, clipped at the sentence end

Token text is a placeholder as long as its word; tokens are separated by one
space and sentences by ``". "``.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

from .model import Annotation, AnnotationDataset, stats

_MASK64 = (1 << 64) - 1
ZIPF_EXPONENT = 1.1
MARKER_WORDS = ("the", "heart", "adrenocortical")
MIN_VOCABULARY = 60

# ranks 1..50; twelve "he" words, "heart" at rank 40
_HEAD_WORDS = (
    "the", "of", "and", "in", "to", "a", "is", "for", "with", "he",
    "that", "by", "was", "were", "her", "on", "as", "are", "from", "here",
    "be", "at", "this", "have", "which", "help", "or", "these", "head", "we",
    "not", "health", "has", "an", "heat", "cells", "held", "it", "their", "heart",
    "been", "hence", "its", "heavy", "cell", "than", "also", "herein", "between", "expression",
)
_SYLLABLES = ("ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki", "ko", "ku", "la")


class SplitMix64:
    """splitmix64: state advances by the golden gamma, output is finalized."""

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        # multiply-shift range reduction
        return (self.next() * n) >> 64


def _synthetic_word(k: int) -> str:
    digits = []
    while True:
        k, r = divmod(k, 16)
        digits.append(_SYLLABLES[r])
        if k == 0 and len(digits) >= 3:
            break
    return "".join(reversed(digits))


def vocabulary(size: int) -> List[str]:
    """Words by Zipf rank (index 0 is rank 1)."""
    if size < MIN_VOCABULARY:
        raise ValueError(f"vocabulary_size must be at least {MIN_VOCABULARY}")
    words = list(_HEAD_WORDS)
    words.extend(_synthetic_word(k) for k in range(size - len(words)))
    # bottom decile of ranks
    words[size - max(1, size // 20)] = "adrenocortical"
    return words


class ZipfSampler:
    def __init__(self, words: List[str], exponent: float = ZIPF_EXPONENT):
        self.words = words
        cum = []
        total = 0.0
        for rank in range(1, len(words) + 1):
            total += rank ** -exponent
            cum.append(total)
        self.cum = [c / total for c in cum]
        self.last = len(words) - 1

    def probability(self, rank: int) -> float:
        lo = self.cum[rank - 2] if rank > 1 else 0.0
        return self.cum[rank - 1] - lo

    def draw(self, rng: SplitMix64) -> str:
        i = bisect_right(self.cum, rng.uniform())
        return self.words[i if i <= self.last else self.last]


@dataclass(frozen=True)
class CorpusSpec:
    doc_count: int
    sentences_per_doc_mean: int = 12
    tokens_per_sentence_mean: int = 15
    genia_fraction: float = 0.9
    vocabulary_size: int = 5000
    seed: int = 0

    def __post_init__(self):
        for name in ("doc_count", "sentences_per_doc_mean", "tokens_per_sentence_mean", "vocabulary_size"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.vocabulary_size < MIN_VOCABULARY:
            raise ValueError(f"vocabulary_size must be at least {MIN_VOCABULARY}")
        if not 0.0 <= self.genia_fraction <= 1.0:
            raise ValueError("genia_fraction must lie in [0, 1]")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class GroundTruth:
    counts: Dict[Tuple[str, str], int] = field(default_factory=dict)
    markers: Dict[str, int] = field(default_factory=dict)
    docs: Dict[str, int] = field(default_factory=dict)

    def count(self, annot_set: str, annot_type: str) -> int:
        return self.counts.get((annot_set, annot_type), 0)

    def total(self, annot_set: str) -> int:
        return sum(v for (s, _), v in self.counts.items() if s == annot_set)


def _doc_records(rng: SplitMix64, doc: str, spec: CorpusSpec, sampler: ZipfSampler,
                 props_for: Dict[str, dict], markers: Counter) -> Tuple[list, bool]:
    genia = rng.uniform() < spec.genia_fraction
    n_sent = 1 + rng.below(2 * spec.sentences_per_doc_mean - 1)
    span_tok = 2 * spec.tokens_per_sentence_mean - 1
    sentences = []
    offset = 0
    for _ in range(n_sent):
        n_tok = 1 + rng.below(span_tok)
        toks = []
        for t in range(n_tok):
            word = sampler.draw(rng)
            if t:
                offset += 1
            toks.append((offset, offset + len(word), word))
            offset += len(word)
        sentences.append(toks)
        offset += 2

    rows = []  # (start, end, set, type, props)
    n_abs = (n_sent + 4) // 5
    rows.append((sentences[0][0][0], sentences[n_abs - 1][-1][1], "om", "ce:abstract", None))
    k = 0
    while k < n_sent:
        run = min(1 + rng.below(4), n_sent - k)
        rows.append((sentences[k][0][0], sentences[k + run - 1][-1][1], "om", "ce:para", None))
        k += run
    for toks in sentences:
        rows.append((toks[0][0], toks[-1][1], "om", "ce:sentence", None))

    if genia:
        for toks in sentences:
            rows.append((toks[0][0], toks[-1][1], "genia", "sentence", None))
            for start, end, word in toks:
                props = props_for.get(word)
                if props is None:
                    props = props_for[word] = {"orig": word}
                rows.append((start, end, "genia", "word", props))
                if word in markers:
                    markers[word] += 1
            i, n = 0, len(toks)
            while i < n:
                r = rng.below(4)
                if r < 2:
                    length = min(1 + rng.below(3), n - i)
                    rows.append((toks[i][0], toks[i + length - 1][1], "genia", "NP" if r == 0 else "VP", None))
                    i += length
                else:
                    i += 1

    rows.sort(key=lambda r: r[:4])
    records = [Annotation(doc, s, t, a, b, n, p) for n, (a, b, s, t, p) in enumerate(rows, 1)]
    return records, genia


def generate(spec: CorpusSpec) -> Tuple[Dict[str, AnnotationDataset], GroundTruth]:
    """Build ``{"om": ..., "genia": ...}`` and the exact counts it contains.

    om-only documents still draw their words: token lengths fix the offsets.
    """
    rng = SplitMix64(spec.seed)
    sampler = ZipfSampler(vocabulary(spec.vocabulary_size))
    width = max(6, len(str(spec.doc_count - 1)))
    props_for: Dict[str, dict] = {}
    markers: Counter = Counter({w: 0 for w in MARKER_WORDS})
    om: Dict[str, List[Annotation]] = {}
    genia: Dict[str, List[Annotation]] = {}
    counts: Counter = Counter()
    docs = Counter()
    for i in range(spec.doc_count):
        doc = f"doc{i:0{width}d}"
        records, has_genia = _doc_records(rng, doc, spec, sampler, props_for, markers)
        docs["om"] += 1
        if has_genia:
            docs["genia"] += 1
        om[doc] = [a for a in records if a.annot_set == "om"]
        if has_genia:
            genia[doc] = [a for a in records if a.annot_set == "genia"]
        counts.update((a.annot_set, a.annot_type) for a in records)
    truth = GroundTruth(
        counts=dict(sorted(counts.items())),
        markers={w: markers[w] for w in MARKER_WORDS},
        docs={"genia": docs["genia"], "om": docs["om"]},
    )
    env = {"om": AnnotationDataset._from_groups(om), "genia": AnnotationDataset._from_groups(genia)}
    _verify(env, truth)
    return env, truth


def _verify(env: Dict[str, AnnotationDataset], truth: GroundTruth) -> None:
    seen: Dict[Tuple[str, str], int] = {}
    for name, ds in env.items():
        st = stats(ds)
        seen.update(st.by_set_type)
        if st.documents != truth.docs.get(name, 0):
            raise AssertionError(f"document count mismatch for {name}")
    if seen != truth.counts:
        raise AssertionError("per-type counts disagree with ground truth")
    words = Counter(a.properties["orig"] for a in env["genia"].records if a.annot_type == "word")
    if any(words[w] != truth.markers[w] for w in MARKER_WORDS):
        raise AssertionError("marker word counts disagree with ground truth")


MANIFEST_NAME = "ground_truth.tsv"


def manifest_text(truth: GroundTruth, spec: CorpusSpec = None) -> str:
    lines = []
    if spec is not None:
        for key, value in asdict(spec).items():
            lines.append(f"spec\t{key}\t{value}")
    for name, n in sorted(truth.docs.items()):
        lines.append(f"docs\t{name}\t{n}")
    for (s, t), n in sorted(truth.counts.items()):
        lines.append(f"count\t{s}\t{t}\t{n}")
    for w in MARKER_WORDS:
        lines.append(f"marker\t{w}\t{truth.markers[w]}")
    return "".join(line + "\n" for line in lines)


def write_manifest(root, truth: GroundTruth, spec: CorpusSpec = None) -> Path:
    path = Path(root) / MANIFEST_NAME
    path.write_text(manifest_text(truth, spec), encoding="utf-8", newline="\n")
    return path


def read_manifest(root) -> GroundTruth:
    truth = GroundTruth()
    with open(Path(root) / MANIFEST_NAME, encoding="utf-8") as fh:
        for line in fh:
            fields = line.rstrip("\n").split("\t")
            if fields[0] == "docs":
                truth.docs[fields[1]] = int(fields[2])
            elif fields[0] == "count":
                truth.counts[(fields[1], fields[2])] = int(fields[3])
            elif fields[0] == "marker":
                truth.markers[fields[1]] = int(fields[2])
    return truth
