"""Functional query language over named annotation datasets.

Grammar::

    expr := IDENT "(" arg ("," arg)* ")" | IDENT
    arg  := expr | STRING | INTEGER

A bare identifier names a bound dataset. Operator names are case-sensitive.
Strings are double-quoted; inside them only ``\\"`` and ``\\\\`` are escapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple, Union

from . import algebra
from .errors import ArityError, PatternError, QueryError, QuerySyntaxError, QueryTypeError, UnboundDatasetError
from .model import AnnotationDataset


@dataclass(frozen=True)
class Ref:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    op: str
    args: tuple
    pos: int = field(default=0, compare=False)


Expr = Union[Ref, Call]
BindingEnv = Mapping[str, AnnotationDataset]

# operator -> (required argument kinds, optional argument kinds)
SIGNATURES: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "FilterSet": (("expr", "text"), ()),
    "FilterType": (("expr", "text"), ()),
    "FilterProperty": (("expr", "text", "text"), ()),
    "RegexProperty": (("expr", "text", "text"), ()),
    "Contains": (("expr", "expr"), ()),
    "ContainedIn": (("expr", "expr"), ()),
    "Before": (("expr", "expr"), ()),
    "After": (("expr", "expr"), ()),
    "Between": (("expr", "expr", "expr"), ()),
    "Sequence": (("expr", "expr"), ("int",)),
    "MatchProperty": (("expr", "expr", "text"), ()),
    "Preceding": (("expr", "expr"), ("int",)),
    "Following": (("expr", "expr"), ("int",)),
}

ANCHORED_OPS = frozenset({"Preceding", "Following"})

_IDENT_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_IDENT_CHARS = _IDENT_START | set("0123456789")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def pos(self, i=None) -> int:
        i = self.i if i is None else i
        return len(self.text[:i].encode("utf-8"))

    def error(self, message, i=None):
        return QuerySyntaxError(message, self.pos(i))

    def skip_ws(self):
        text = self.text
        while self.i < len(text) and text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            raise self.error(f"expected {ch!r}, found {found}")
        self.i += 1

    def ident(self) -> str:
        start = self.i
        text = self.text
        while self.i < len(text) and text[self.i] in _IDENT_CHARS:
            self.i += 1
        return text[start:self.i]

    def string(self) -> str:
        start = self.i
        self.i += 1
        out = []
        text = self.text
        while True:
            if self.i >= len(text):
                raise self.error("unterminated string", start)
            ch = text[self.i]
            if ch == '"':
                self.i += 1
                return "".join(out)
            if ch == "\\":
                nxt = text[self.i + 1:self.i + 2]
                if nxt not in ('"', "\\"):
                    raise self.error("invalid escape in string")
                out.append(nxt)
                self.i += 2
                continue
            out.append(ch)
            self.i += 1

    def integer(self) -> int:
        start = self.i
        while self.i < len(self.text) and self.text[self.i].isdigit():
            self.i += 1
        return int(self.text[start:self.i])

    def arg(self):
        ch = self.peek()
        if ch == '"':
            return self.string()
        if ch.isdigit():
            return self.integer()
        if ch in _IDENT_START:
            return self.expr()
        if not ch:
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected character {ch!r}")

    def expr(self) -> Expr:
        ch = self.peek()
        if not ch or ch not in _IDENT_START:
            raise self.error("expected operator or dataset name")
        start = self.i
        name = self.ident()
        if self.peek() != "(":
            return Ref(name, self.pos(start))
        if name not in SIGNATURES:
            raise QueryError(f"unknown operator {name!r}", self.pos(start))
        self.i += 1
        args = [self.arg()]
        while self.peek() == ",":
            self.i += 1
            args.append(self.arg())
        self.expect(")")
        node = Call(name, tuple(args), self.pos(start))
        _check_signature(node)
        return node


def _kind(arg) -> str:
    if isinstance(arg, (Ref, Call)):
        return "expr"
    if isinstance(arg, bool):
        return "bool"
    if isinstance(arg, int):
        return "int"
    return "text"


def _check_signature(node: Call) -> None:
    required, optional = SIGNATURES[node.op]
    n = len(node.args)
    if not len(required) <= n <= len(required) + len(optional):
        want = str(len(required)) if not optional else f"{len(required)}-{len(required) + len(optional)}"
        raise ArityError(f"{node.op} takes {want} arguments, got {n}", node.pos)
    kinds = required + optional
    for k, (arg, kind) in enumerate(zip(node.args, kinds), 1):
        got = _kind(arg)
        if got != kind:
            raise ArityError(f"argument {k} of {node.op} must be {kind}, got {got}", node.pos)
        if kind == "int" and arg < 1:
            raise ArityError(f"argument {k} of {node.op} must be a positive integer", node.pos)


def parse(text: str) -> Expr:
    """Parse query text into an expression tree."""
    p = _Parser(text)
    node = p.expr()
    if p.peek():
        raise p.error(f"unexpected trailing input {p.peek()!r}")
    return node


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_text(node) -> str:
    """Render an expression back to query text; ``parse(to_text(e)) == e``."""
    if isinstance(node, Ref):
        return node.name
    if isinstance(node, Call):
        return f"{node.op}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, int):
        return str(node)
    return _quote(node)


def refs(node: Expr) -> List[str]:
    if isinstance(node, Ref):
        return [node.name]
    out = []
    for a in node.args:
        if isinstance(a, (Ref, Call)):
            out.extend(refs(a))
    return out


def check(node: Expr, names, *, root: bool = True) -> None:
    """Reject unbound names, misplaced anchored operators and bad patterns
    before any data is scanned."""
    if isinstance(node, Ref):
        if node.name not in names:
            raise UnboundDatasetError(f"unbound dataset {node.name!r}", node.pos)
        return
    if not isinstance(node, Call) or node.op not in SIGNATURES:
        raise QueryError(f"not a query expression: {node!r}")
    _check_signature(node)
    if node.op in ANCHORED_OPS and not root:
        raise QueryTypeError(f"{node.op} yields anchored matches and cannot be nested", node.pos)
    if node.op == "RegexProperty":
        try:
            algebra.compile_pattern(node.args[2])
        except PatternError as exc:
            raise PatternError(exc.detail, node.pos) from None
    for a in node.args:
        if isinstance(a, (Ref, Call)):
            check(a, names, root=False)


_DISPATCH = {
    "FilterSet": algebra.filter_set,
    "FilterType": algebra.filter_type,
    "FilterProperty": algebra.filter_property,
    "RegexProperty": algebra.regex_property,
    "Contains": algebra.contains,
    "ContainedIn": algebra.contained_in,
    "Before": algebra.before,
    "After": algebra.after,
    "Between": algebra.between,
    "Sequence": algebra.sequence,
    "MatchProperty": algebra.match_property,
    "Preceding": algebra.preceding,
    "Following": algebra.following,
}


def _eval(node: Expr, env: BindingEnv):
    if isinstance(node, Ref):
        return env[node.name]
    args = [_eval(a, env) if isinstance(a, (Ref, Call)) else a for a in node.args]
    return _DISPATCH[node.op](*args)


def evaluate(node: Expr, env: BindingEnv):
    """Evaluate against ``env``. Returns an AnnotationDataset, or a list of
    AnchoredMatches when the root is Preceding/Following."""
    if isinstance(node, str):
        node = parse(node)
    check(node, env)
    return _eval(node, env)


def is_anchored(node: Expr) -> bool:
    return isinstance(node, Call) and node.op in ANCHORED_OPS
