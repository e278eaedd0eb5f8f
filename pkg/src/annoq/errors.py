from __future__ import annotations

from typing import Optional


class QueryError(ValueError):
    """A query that cannot be parsed, bound or evaluated.

    ``pos`` is a byte offset into the UTF-8 query text when known.
    """

    def __init__(self, message: str, pos: Optional[int] = None):
        self.pos = pos
        self.detail = message
        if pos is not None:
            message = f"{message} (at byte {pos})"
        super().__init__(message)


class QuerySyntaxError(QueryError):
    pass


class ArityError(QueryError):
    pass


class UnboundDatasetError(QueryError):
    pass


class QueryTypeError(QueryError):
    pass


class PatternError(QueryError):
    pass
