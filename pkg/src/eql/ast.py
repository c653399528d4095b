"""Syntax tree for EQL queries and suggestions.

All nodes are frozen dataclasses so parsed trees compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

AGGREGATES = ("count", "avg", "sum", "max", "min")
COMPARISON_OPS = ("=", "!=", ">", ">=", "<", "<=")
MAX_PATH = 8
MAX_VARIABLES = 50


@dataclass(frozen=True)
class Name:
    text: str


@dataclass(frozen=True)
class Anonymous:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class SubjectExpr:
    """``(s : p)``: every object o with s : p : o in the graph."""

    subject: "Term"
    prop: "Term"


@dataclass(frozen=True)
class PropertyPath:
    """``?x.nationality.capital``."""

    base: "Term"
    properties: tuple[str, ...]


@dataclass(frozen=True)
class Bound:
    """A constant already resolved to a value. Produced by rewriting, never parsed."""

    value: object


Term = Union[Name, Anonymous, Var, SubjectExpr, PropertyPath, Bound]


@dataclass(frozen=True)
class AllQualifiers:
    """The ``(?)`` qualifier block."""


@dataclass(frozen=True)
class Pattern:
    s: Term
    p: Term
    o: Term
    qualifiers: Union[tuple[tuple[Term, Term], ...], AllQualifiers] = ()


@dataclass(frozen=True)
class AggCall:
    func: str
    arg: Var


@dataclass(frozen=True)
class Compare:
    lhs: object  # Term | AggCall
    op: str
    rhs: object


@dataclass(frozen=True)
class Match:
    operand: Term
    template: str  # raw template text; \% and \_ still escaped


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


Node = Union[Pattern, Compare, Match, BoolConst, And, Or, Not]


@dataclass(frozen=True)
class PatternStatement:
    tree: Node


@dataclass(frozen=True)
class Assignment:
    var: Var
    func: str
    arg: Var


@dataclass(frozen=True)
class FilterClause:
    condition: Node


Statement = Union[PatternStatement, Assignment, FilterClause]


@dataclass(frozen=True)
class OrderKey:
    key: Union[Var, PropertyPath]
    descending: bool = False


@dataclass(frozen=True)
class Query:
    """A parsed query. Filters stay in ``statements`` at the point they were written."""

    statements: tuple[Statement, ...]
    order_by: tuple[OrderKey, ...] = ()
    group_by: Union[Var, PropertyPath, None] = None
    ans: Union[tuple, None] = None

    @property
    def filters(self) -> list[Node]:
        return [st.condition for st in self.statements if isinstance(st, FilterClause)]


@dataclass(frozen=True)
class Fact:
    """A ground statement as written in a suggestion or a KGT line."""

    s: str
    p: str
    o: str
    qualifiers: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Suggestion:
    kind: str  # add | change | delete
    before: Fact
    after: Union[Fact, None] = None
    refs: tuple[str, ...] = ()


def walk_terms(term):
    """Yield ``term`` and every term nested in it."""
    yield term
    if isinstance(term, SubjectExpr):
        yield from walk_terms(term.subject)
        yield from walk_terms(term.prop)
    elif isinstance(term, PropertyPath):
        yield from walk_terms(term.base)


def node_terms(node):
    """Every term (recursively) appearing in a condition tree."""
    if isinstance(node, Pattern):
        tops = [node.s, node.p, node.o]
        if not isinstance(node.qualifiers, AllQualifiers):
            for q, v in node.qualifiers:
                tops += [q, v]
        for t in tops:
            yield from walk_terms(t)
    elif isinstance(node, Compare):
        for side in (node.lhs, node.rhs):
            if isinstance(side, AggCall):
                yield side.arg
            else:
                yield from walk_terms(side)
    elif isinstance(node, Match):
        yield from walk_terms(node.operand)
    elif isinstance(node, (And, Or)):
        for item in node.items:
            yield from node_terms(item)
    elif isinstance(node, Not):
        yield from node_terms(node.item)


def node_patterns(node):
    if isinstance(node, Pattern):
        yield node
    elif isinstance(node, (And, Or)):
        for item in node.items:
            yield from node_patterns(item)
    elif isinstance(node, Not):
        yield from node_patterns(node.item)


def query_variables(query: Query) -> list[str]:
    """Distinct variable names in order of first appearance."""
    seen: dict[str, None] = {}

    def visit(term):
        for t in walk_terms(term):
            if isinstance(t, Var):
                seen.setdefault(t.name)

    for st in query.statements:
        if isinstance(st, Assignment):
            seen.setdefault(st.var.name)
            seen.setdefault(st.arg.name)
        else:
            node = st.tree if isinstance(st, PatternStatement) else st.condition
            for t in node_terms(node):
                visit(t)
    for key in query.order_by:
        visit(key.key)
    if query.group_by is not None:
        visit(query.group_by)
    for item in query.ans or ():
        visit(item)
    return list(seen)
