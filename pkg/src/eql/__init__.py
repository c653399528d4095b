"""EQL: a knowledge-graph query engine over qualified spo statements."""

from eql.errors import (
    AggregateError, EQLError, EQLSyntaxError, RevisionError, RuleError,
    TypeMismatchError, UnknownEntityError, UnknownNameError,
)
from eql.evaluator import ResultSet, evaluate
from eql.parser import parse_query, parse_simplified, parse_suggestion, pretty_print
from eql.store import Store
from eql.values import Value

__version__ = "0.1.0"

__all__ = [
    "AggregateError", "EQLError", "EQLSyntaxError", "ResultSet", "RevisionError",
    "RuleError", "Store", "TypeMismatchError", "UnknownEntityError", "UnknownNameError",
    "Value", "evaluate", "parse_query", "parse_simplified", "parse_suggestion",
    "pretty_print",
]
