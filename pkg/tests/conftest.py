import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from annoq.generator import CorpusSpec, generate  # noqa: E402
from annoq.model import Annotation, AnnotationDataset  # noqa: E402

SAMPLE = Annotation("123456789", "ge", "NP", 1439, 1450, 376, {"orig": "other trees", "pos": "jj nns"})

WORDS = ["heart", "the", "he", "adrenocortical", "cell", "hex", "a&b", "x=y"]


def random_dataset(rng: random.Random, n: int, *, docs=3, annot_set="s", types=("t", "u"),
                   max_offset=40, id_base=0, prop_rate=0.5) -> AnnotationDataset:
    records = []
    for k in range(n):
        start = rng.randrange(max_offset)
        end = start + rng.randrange(0, 12)
        props = None
        if rng.random() < prop_rate:
            props = {"orig": rng.choice(WORDS)}
            if rng.random() < 0.3:
                props["pos"] = rng.choice(["nn", "jj"])
        records.append(Annotation(
            f"d{rng.randrange(docs)}", annot_set, rng.choice(types), start, end, id_base + k, props))
    return AnnotationDataset(records)


class Generated:
    def __init__(self, spec):
        self.spec = spec
        self.env, self.truth = generate(spec)


@pytest.fixture(scope="session")
def small_corpus():
    return Generated(CorpusSpec(doc_count=60, sentences_per_doc_mean=6, tokens_per_sentence_mean=8,
                                vocabulary_size=200, seed=11))


_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    verdicts = item.config.stash[_VERDICTS]
    if rep.when == "call" or number not in verdicts:
        verdicts[number] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, config):
    verdicts = config.stash[_VERDICTS]
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        title, verdict, detail = verdicts[number]
        line = f"criterion {number} {title}: {verdict}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
