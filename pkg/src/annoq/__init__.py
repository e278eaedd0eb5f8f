"""Region-algebra queries over stand-off text annotations."""

from .algebra import (
    AnchoredMatches,
    after,
    before,
    between,
    contained_in,
    contains,
    filter_property,
    filter_set,
    filter_type,
    following,
    match_property,
    preceding,
    regex_property,
    sequence,
)
from .engine import ExecConfig, Executor, PartitionedStore, execute, fnv1a64, partition, skew
from .errors import QueryError
from .model import Annotation, AnnotationDataset, normalize, stats, validate
from .query import evaluate, parse, to_text
from .storage import load_corpus, load_tsv, save_tsv

__version__ = "0.1.0"
