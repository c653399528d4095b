"""Derived properties: ``x : head : y`` defined by a query body over x and y.

Rules are expanded when a query uses the head property, and can be
materialized into ordinary statements tagged ``(derived_by: <rule id>)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from eql.ast import (
    And, AllQualifiers, Compare, Match, Name, Not, Or, Pattern,
    PatternStatement, PropertyPath, Query, SubjectExpr, Var, node_patterns, walk_terms,
)
from eql.errors import RuleError
from eql.parser import parse_query
from eql.store import PROPERTY_KIND, Store
from eql.values import Value

DEPTH_LIMIT = 4
DERIVED_BY = "derived_by"
HEAD_VARS = ("x", "y")


@dataclass(frozen=True)
class Rule:
    id: str
    head_property: str
    body: Query
    head_vars: tuple[str, str] = HEAD_VARS

    @property
    def tree(self):
        return self.body.statements[0].tree


def rule_id_for(property_id: str) -> str:
    return f"rule-{property_id}"


def rule_for(store: Store, property_id: str) -> Rule | None:
    return store.rules.get(rule_id_for(property_id))


def _referenced_properties(store: Store, tree) -> set[str]:
    """Property ids named anywhere in a rule body."""
    out = set()
    names = []
    for pat in node_patterns(tree):
        names.append(pat.p)
        for t in (pat.s, pat.o):
            names.extend(walk_terms(t))
        if not isinstance(pat.qualifiers, AllQualifiers):
            names.extend(q for q, _ in pat.qualifiers)
    stack = [tree]
    while stack:
        n = stack.pop()
        if isinstance(n, (And, Or)):
            stack.extend(n.items)
        elif isinstance(n, Not):
            stack.append(n.item)
        elif isinstance(n, Compare):
            for side in (n.lhs, n.rhs):
                if not hasattr(side, "func"):
                    names.extend(walk_terms(side))
    for t in names:
        if isinstance(t, SubjectExpr):
            names_p = [t.prop]
        elif isinstance(t, PropertyPath):
            names_p = [Name(p) for p in t.properties]
        else:
            names_p = [t]
        for n in names_p:
            if isinstance(n, Name):
                pid = store.find(n.text)
                if pid is not None and store.get(pid).kind == PROPERTY_KIND:
                    out.add(pid)
    return out


def _reaches(store: Store, start: set[str], target: str) -> bool:
    seen = set()
    stack = list(start)
    while stack:
        pid = stack.pop()
        if pid == target:
            return True
        if pid in seen:
            continue
        seen.add(pid)
        rule = rule_for(store, pid)
        if rule is not None:
            stack.extend(_referenced_properties(store, rule.tree))
    return False


def define_rule(store: Store, head: str, body) -> str:
    """Register a rule for property ``head`` (name or id). Returns the rule id."""
    pid = store.find(head)
    if pid is None or store.get(pid).kind != PROPERTY_KIND:
        raise RuleError(f"unknown property {head!r}")
    query = body if isinstance(body, Query) else parse_query(body, bare_vars=HEAD_VARS)
    if (len(query.statements) != 1 or not isinstance(query.statements[0], PatternStatement)
            or query.order_by or query.group_by is not None or query.ans is not None):
        raise RuleError("a rule body is a single pattern statement without clauses")
    used = {t.name for pat in node_patterns(query.statements[0].tree)
            for t in _pattern_terms(pat) if isinstance(t, Var)}
    if not set(HEAD_VARS) <= used:
        raise RuleError("a rule body must bind both x and y")
    for pat in node_patterns(query.statements[0].tree):
        if isinstance(pat.p, Name) and store.find(pat.p.text) is None:
            raise RuleError(f"unknown property {pat.p.text!r} in rule body")
    rid = rule_id_for(pid)
    with store.lock:
        if rid in store.rules:
            raise RuleError(f"property {head!r} already has a rule")
        refs = _referenced_properties(store, query.statements[0].tree)
        if pid in refs or _reaches(store, refs - {pid}, pid):
            raise RuleError(f"cycle detected: the rule for {head!r} depends on itself")
        store.rules[rid] = Rule(rid, pid, query)
    return rid


def _pattern_terms(pat: Pattern):
    for t in (pat.s, pat.p, pat.o):
        yield from walk_terms(t)
    if not isinstance(pat.qualifiers, AllQualifiers):
        for q, v in pat.qualifiers:
            yield from walk_terms(q)
            yield from walk_terms(v)


# -- expansion ------------------------------------------------------------

_fresh = itertools.count(1)


def substitute_term(term, mapping: dict):
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    if isinstance(term, SubjectExpr):
        return SubjectExpr(substitute_term(term.subject, mapping), substitute_term(term.prop, mapping))
    if isinstance(term, PropertyPath):
        return PropertyPath(substitute_term(term.base, mapping), term.properties)
    return term


def substitute(node, mapping: dict):
    """Replace variables in a condition tree according to ``mapping``."""
    st = lambda t: t if hasattr(t, "func") else substitute_term(t, mapping)  # noqa: E731
    if isinstance(node, Pattern):
        quals = node.qualifiers
        if not isinstance(quals, AllQualifiers):
            quals = tuple((st(q), st(v)) for q, v in quals)
        return Pattern(st(node.s), st(node.p), st(node.o), quals)
    if isinstance(node, Compare):
        return Compare(st(node.lhs), node.op, st(node.rhs))
    if isinstance(node, Match):
        return Match(st(node.operand), node.template)
    if isinstance(node, And):
        return And(tuple(substitute(i, mapping) for i in node.items))
    if isinstance(node, Or):
        return Or(tuple(substitute(i, mapping) for i in node.items))
    if isinstance(node, Not):
        return Not(substitute(node.item, mapping))
    return node


def _derived_rule(store: Store, pattern: Pattern) -> Rule | None:
    if not isinstance(pattern.p, Name) or pattern.qualifiers:
        return None
    pid = store.find(pattern.p.text)
    return None if pid is None else rule_for(store, pid)


def instantiate(rule: Rule, s, o, tag: str | None = None):
    """The rule body with x, y replaced by ``s``, ``o`` and locals renamed."""
    tag = tag or str(next(_fresh))
    tree = rule.tree
    local = {}
    for pat in node_patterns(tree):
        for t in _pattern_terms(pat):
            if isinstance(t, Var) and t.name not in rule.head_vars:
                local[t.name] = Var(f"_r{tag}_{t.name}")
    mapping = dict(local)
    mapping[rule.head_vars[0]] = s
    mapping[rule.head_vars[1]] = o
    return substitute(tree, mapping)


def expand(node, store: Store, depth_limit: int = DEPTH_LIMIT, keep_base: bool = False):
    """Replace patterns on derived properties by their rule bodies.

    With ``keep_base`` the original pattern is kept as an alternative, so
    statements already materialized for the property still match.
    """
    return _expand(node, store, depth_limit, keep_base)


def _expand(node, store, budget, keep_base):
    if isinstance(node, Pattern):
        rule = _derived_rule(store, node)
        if rule is None:
            return node
        if budget <= 0:
            raise RuleError(f"rule expansion deeper than {DEPTH_LIMIT} levels")
        s, o = node.s, node.o
        body = instantiate(rule, s, o)
        body = _expand(body, store, budget - 1, keep_base)
        return Or((node, body)) if keep_base else body
    if isinstance(node, And):
        return And(tuple(_expand(i, store, budget, keep_base) for i in node.items))
    if isinstance(node, Or):
        return Or(tuple(_expand(i, store, budget, keep_base) for i in node.items))
    if isinstance(node, Not):
        return Not(_expand(node.item, store, budget, keep_base))
    return node


def expand_query(query: Query, store: Store, depth_limit: int = DEPTH_LIMIT) -> Query:
    """Query with every derived-property pattern replaced by its body."""
    statements = []
    for st in query.statements:
        if isinstance(st, PatternStatement):
            st = PatternStatement(expand(st.tree, store, depth_limit))
        statements.append(st)
    return Query(tuple(statements), query.order_by, query.group_by, query.ans)


# -- materialization ------------------------------------------------------


def derived_by_property(store: Store) -> str:
    pid = store.find(DERIVED_BY)
    if pid is None:
        pid = store.new_entity(DERIVED_BY, PROPERTY_KIND).id
    return pid


def materialize(store: Store, rule_id: str) -> int:
    """Insert every derivable ``x : head : y`` as a tagged statement."""
    from eql.evaluator import evaluate

    rule = store.rules.get(rule_id)
    if rule is None:
        raise RuleError(f"unknown rule {rule_id!r}")
    result = evaluate(rule.body, store)
    tag = derived_by_property(store)
    added = 0
    with store.lock:
        for row in result.rows:
            x, y = row.get("x"), row.get("y")
            if x is None or y is None or not x.is_entity:
                continue
            before = len(store)
            store.add_statement(x.payload, rule.head_property, y, [(tag, Value.text(rule_id))])
            added += len(store) - before
    return added


def retract(store: Store, rule_id: str) -> int:
    """Remove statements materialized by ``rule_id``."""
    pid = store.find(DERIVED_BY)
    if pid is None:
        return 0
    with store.lock:
        doomed = [st.id for st in store.statements.values()
                  if any(q == pid and v.payload == rule_id for q, v in st.qualifiers)]
        for sid in doomed:
            store.remove_statement(sid)
    return len(doomed)
