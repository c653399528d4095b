"""Query evaluation.

Statements run in order over a list of binding rows. Pattern statements join
against the store, assignments aggregate over every row produced so far (per
group when ``\\group by`` is active), filters drop rows. Names are resolved
through aliases and the duplicate-name registry before anything runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Callable, Iterable

from eql.ast import (
    AggCall, AllQualifiers, And, Anonymous, Assignment, BoolConst, Bound, Compare,
    FilterClause, Match, Name, Not, Or, Pattern, PatternStatement, PropertyPath,
    Query, SubjectExpr, Var, node_patterns, query_variables,
)
from eql.errors import AggregateError, TypeMismatchError, UnknownNameError
from eql.similarity import FuzzySuggestion, suggest_similar as _suggest_similar
from eql.store import DuplicateNameEntry, SpoPattern, Store
from eql.template import match_template
from eql.values import DATE, ENTITY, QUALIFIERS, QUANTITY, TEXT, Quantity, Value, parse_value

PAGE_SIZE = 50
PROGRESS_THRESHOLD = 100_000
UNKNOWN_GROUP = "(unknown)"

# Hidden variable prefixes. Anonymous and qualifier-block variables are
# projected; the others are local to the statement that introduced them.
_ANON = "_a"
_QUALS = "_q"
_LOCAL_PREFIXES = ("_h", "_r", "_p")

__all__ = [
    "BindingRow", "Column", "Group", "Page", "ResultSet", "TriState", "aggregate",
    "compare", "evaluate", "group_rows", "match_template", "order_rows", "paginate",
    "resolve_path", "suggest_similar",
]


class TriState(Enum):
    TRUE = "true"
    FALSE = "false"
    INCOMPARABLE = "incomparable"

    def __bool__(self) -> bool:
        return self is TriState.TRUE


@dataclass
class BindingRow:
    values: dict[str, Value]
    provenance: frozenset[int] = frozenset()

    def get(self, var: str, default=None):
        return self.values.get(var, default)

    def __getitem__(self, var: str) -> Value:
        return self.values[var]

    def __contains__(self, var: str) -> bool:
        return var in self.values

    def identity(self) -> tuple:
        return tuple(sorted((k, v.key()) for k, v in self.values.items()))


@dataclass(frozen=True)
class Column:
    key: str  # variable name, "x.nationality" for paths, hidden name for '?'
    label: str


@dataclass
class Group:
    key: Value | None
    label: str
    rows: list[BindingRow]


@dataclass
class Page:
    rows: list[BindingRow]
    index: int
    more: bool


@dataclass
class ResultSet:
    columns: list[Column] = field(default_factory=list)
    rows: list[BindingRow] = field(default_factory=list)
    groups: list[Group] | None = None
    group_label: str = ""
    reports: list[DuplicateNameEntry] = field(default_factory=list)
    aggregates: dict[str, Value] = field(default_factory=dict)
    extremes: dict[str, list[BindingRow]] = field(default_factory=dict)
    page_size: int = PAGE_SIZE

    def __len__(self) -> int:
        return len(self.rows)

    def column_values(self, key: str) -> list[Value]:
        return [r[key] for r in self.rows if key in r]

    def tuples(self) -> list[tuple]:
        return [tuple(r.get(c.key).key() if c.key in r else None for c in self.columns)
                for r in self.rows]

    def page(self, index: int) -> Page:
        return paginate(self, index)


# -- comparison and aggregation -------------------------------------------


def _as_number(v: Value):
    """Magnitude of unitless numbers and year-only dates, else None."""
    if v.tag == QUANTITY and not v.payload.unit:
        return v.payload.magnitude
    if v.tag == DATE and v.payload.month is None:
        return Decimal(v.payload.year)
    return None


def _ordered(lhs: Value, rhs: Value):
    """Comparable projections of two values, or None when they are incomparable."""
    if lhs.tag == QUANTITY and rhs.tag == QUANTITY:
        if lhs.payload.unit != rhs.payload.unit:
            return None
        return lhs.payload.magnitude, rhs.payload.magnitude
    if lhs.tag == DATE and rhs.tag == DATE:
        return lhs.payload.sort_key, rhs.payload.sort_key
    if DATE in (lhs.tag, rhs.tag) and QUANTITY in (lhs.tag, rhs.tag):
        date, num = (lhs, rhs) if lhs.tag == DATE else (rhs, lhs)
        n = _as_number(num)
        if n is None or n != n.to_integral_value():
            return None
        key = date.payload.sort_key
        other = (int(n), 0, 0)
        return (key, other) if lhs is date else (other, key)
    if lhs.tag == TEXT and rhs.tag == TEXT:
        return lhs.payload, rhs.payload
    return None


def compare(lhs: Value, op: str, rhs: Value) -> TriState:
    """Three-valued comparison; mismatched types or units are incomparable."""
    if lhs.tag in (ENTITY, "boolean") or rhs.tag in (ENTITY, "boolean"):
        if lhs.tag != rhs.tag or op not in ("=", "!="):
            return TriState.INCOMPARABLE
        equal = lhs.payload == rhs.payload
        return TriState.TRUE if equal == (op == "=") else TriState.FALSE
    pair = _ordered(lhs, rhs)
    if pair is None:
        return TriState.INCOMPARABLE
    a, b = pair
    result = {
        "=": a == b, "!=": a != b, ">": a > b, ">=": a >= b, "<": a < b, "<=": a <= b,
    }[op]
    return TriState.TRUE if result else TriState.FALSE


def aggregate(func: str, values: Iterable[Value]) -> Value:
    """count, sum, avg, max or min over a multiset of values, in exact decimals."""
    values = list(values)
    if func == "count":
        return Value.quantity(len(values))
    if not values:
        if func == "sum":
            return Value.quantity(0)
        raise AggregateError(f"{func} of an empty set")
    if func in ("sum", "avg"):
        if any(v.tag != QUANTITY for v in values):
            raise AggregateError(f"{func} needs quantities")
        units = {v.payload.unit for v in values}
        if len(units) != 1:
            raise AggregateError(f"{func} over mixed units: {', '.join(sorted(units))}")
        total = sum((v.payload.magnitude for v in values), Decimal(0))
        unit = units.pop()
        if func == "avg":
            total = total / Decimal(len(values))
        return Value(QUANTITY, Quantity(total, unit))
    if func in ("max", "min"):
        tags = {v.tag for v in values}
        if tags == {QUANTITY}:
            units = {v.payload.unit for v in values}
            if len(units) != 1:
                raise AggregateError(f"{func} over mixed units: {', '.join(sorted(units))}")
            pick = max if func == "max" else min
            return pick(values, key=lambda v: v.payload.magnitude)
        if tags == {DATE}:
            pick = max if func == "max" else min
            return pick(values, key=lambda v: v.payload.sort_key)
        raise AggregateError(f"{func} needs quantities of one unit or dates")
    raise AggregateError(f"unknown aggregate function {func!r}")


# -- ordering and grouping -------------------------------------------------


def _sort_class(v: Value, store: Store | None):
    """(class, sort key) for ordering; dates and bare numbers share a class."""
    if v.tag == QUANTITY:
        unit = v.payload.unit
        return ("num", unit or "time"), (v.payload.magnitude, 0, 0)
    if v.tag == DATE:
        y, m, d = v.payload.sort_key
        return ("num", "time"), (Decimal(y), m, d)
    if v.tag == TEXT:
        return ("text", ""), v.payload
    if v.tag == ENTITY:
        name = store.display_name(v.payload) if store is not None else v.payload
        return ("entity", ""), (name.casefold(), v.payload)
    if v.tag == "boolean":
        return ("bool", ""), v.payload
    return (v.tag, ""), v.key()


def _key_values(row: BindingRow, key, store: Store | None) -> list[Value]:
    if isinstance(key, Var):
        v = row.get(key.name)
        return [] if v is None else [v]
    if isinstance(key, PropertyPath):
        base = _key_values(row, key.base, store)
        out = []
        for b in base:
            out.extend(resolve_path(store, b, key.properties))
        return out
    if isinstance(key, str):
        v = row.get(key)
        return [] if v is None else [v]
    raise TypeError(f"not a key: {key!r}")


def order_rows(rows: list[BindingRow], key, descending: bool = False,
               store: Store | None = None) -> list[BindingRow]:
    """Stable sort by ``key`` (a Var, PropertyPath or variable name).

    Rows without a value for the key keep their relative order at the end.
    Years compare with full dates; other mixtures raise TypeMismatchError.
    """
    keyed, missing = [], []
    classes = set()
    for row in rows:
        vals = _key_values(row, key, store)
        if not vals:
            missing.append(row)
            continue
        scored = [_sort_class(v, store) for v in vals]
        classes.update(c for c, _ in scored)
        pick = max if descending else min
        keyed.append((pick(k for _, k in scored), row))
    if len(classes) > 1:
        raise TypeMismatchError(f"cannot order by {_key_label(key)}: mixed value types")
    keyed.sort(key=lambda kr: kr[0], reverse=descending)
    return [r for _, r in keyed] + missing


def _key_label(key) -> str:
    if isinstance(key, Var):
        return key.name
    if isinstance(key, PropertyPath):
        return _key_label(key.base) + "".join("." + p for p in key.properties)
    return str(key)


def group_rows(rows: list[BindingRow], key, store: Store | None = None) -> list[Group]:
    """Partition rows by ``key`` in order of first appearance.

    A row whose key has several values joins each of those groups; rows
    without a value go to a final ``(unknown)`` group.
    """
    groups: dict[tuple, Group] = {}
    unknown = []
    for row in rows:
        vals = _key_values(row, key, store)
        if not vals:
            unknown.append(row)
            continue
        seen = set()
        for v in vals:
            k = v.key()
            if k in seen:
                continue
            seen.add(k)
            if k not in groups:
                label = store.display_name(v.payload) if (store and v.is_entity) else str(v)
                groups[k] = Group(v, label, [])
            groups[k].rows.append(row)
    out = list(groups.values())
    if unknown:
        out.append(Group(None, UNKNOWN_GROUP, unknown))
    return out


def paginate(rs: ResultSet, page: int, page_size: int | None = None) -> Page:
    """Rows ``[n*i, n*(i+1))``; ``more`` tells whether rows remain after the page."""
    if page < 0:
        raise ValueError("page index must be >= 0")
    n = page_size or rs.page_size
    start = n * page
    rows = rs.rows[start:start + n]
    return Page(rows, page, start + n < len(rs.rows))


# -- paths and names --------------------------------------------------------


def _property_id(store: Store, name: str) -> str:
    res = store.resolve_name(name)
    if not res.found:
        raise UnknownNameError(name, res.suggestions)
    return res.entity_id


def objects_of(store: Store, subject: Value, prop_id: str, expand_rules: bool = True) -> list[Value]:
    """Every o with ``subject : prop : o``, through rules when the property is derived."""
    if not subject.is_entity:
        return []
    out = [st.o for st in store.lookup(SpoPattern(s=subject.payload, p=prop_id))]
    if expand_rules:
        from eql.rewrite import instantiate, rule_for

        rule = rule_for(store, prop_id)
        if rule is not None:
            ev = _Evaluator(store, expand_rules=True)
            tree = ev.prepare(instantiate(rule, Bound(subject), Var("_o")))
            for row in ev.eval_node(tree, [BindingRow({})]):
                if "_o" in row:
                    out.append(row["_o"])
    seen, uniq = set(), []
    for v in out:
        if v.key() not in seen:
            seen.add(v.key())
            uniq.append(v)
    return uniq


def resolve_path(store: Store, base: Value, properties) -> list[Value]:
    """Follow ``base.p1.p2...``; every step may fan out to several values."""
    current = [base]
    for i, prop in enumerate(properties):
        pid = _property_id(store, prop)
        nxt = []
        for v in current:
            if not v.is_entity:
                raise TypeMismatchError(
                    f"property path step {prop!r} applied to non-entity value {v}")
            nxt.extend(objects_of(store, v, pid))
        current = nxt
        if not current:
            break
    return current


def suggest_similar(surface: str, pool=None, store: Store | None = None,
                    limit: int | None = 5) -> list[FuzzySuggestion]:
    """Names within normalized edit distance 0.4 of ``surface``, nearest first."""
    if pool is None:
        pool = store.name_pool() if store is not None else ()
    return _suggest_similar(surface, pool, limit)


# -- the evaluator ----------------------------------------------------------


@dataclass(frozen=True)
class _AllQ:
    """Qualifier block ``(?)`` bound to a hidden variable."""

    var: str


def _dedup(rows: list[BindingRow]) -> list[BindingRow]:
    index: dict[tuple, int] = {}
    out: list[BindingRow] = []
    for r in rows:
        k = r.identity()
        i = index.get(k)
        if i is None:
            index[k] = len(out)
            out.append(r)
        elif not r.provenance <= out[i].provenance:
            out[i] = BindingRow(out[i].values, out[i].provenance | r.provenance)
    return out


def _has_agg(node) -> bool:
    return isinstance(node, Compare) and (isinstance(node.lhs, AggCall) or isinstance(node.rhs, AggCall))


def _is_generator(node) -> bool:
    return any(True for _ in node_patterns(node)) and not isinstance(node, Not)


def _is_hidden(name: str) -> bool:
    return name.startswith("_")


class _Evaluator:
    def __init__(self, store: Store, expand_rules: bool = True, fuzzy: bool = True):
        self.store = store
        self.expand_rules = expand_rules
        self.fuzzy = fuzzy
        self.reports: dict[str, DuplicateNameEntry] = {}
        self.counter = itertools.count(1)
        self.anon_vars: list[str] = []
        self.path_props: dict[str, str] = {}

    # name resolution ------------------------------------------------------

    def _resolve(self, surface: str):
        res = self.store.resolve_name(surface, fuzzy=self.fuzzy)
        if res.report is not None:
            self.reports.setdefault(res.report.surface_name.casefold(), res.report)
        return res

    def _entity(self, surface: str) -> Bound:
        res = self._resolve(surface)
        if not res.found:
            raise UnknownNameError(surface, res.suggestions)
        return Bound(Value.entity(res.entity_id))

    def _value(self, surface: str, key: str | None) -> Bound:
        res = self._resolve(surface)
        if res.found:
            return Bound(Value.entity(res.entity_id))
        return Bound(parse_value(surface, key))

    def _fresh(self, prefix: str) -> Var:
        return Var(f"{prefix}{next(self.counter)}")

    # preparation ----------------------------------------------------------

    def prepare(self, node):
        """Anonymize, expand rules, resolve names and flatten nested terms."""
        node = self._anonymize(node)
        if self.expand_rules and self.store.rules:
            from eql.rewrite import expand

            node = expand(node, self.store, keep_base=True)
        return self._lower(node)

    def _anonymize(self, node):
        if isinstance(node, Pattern):
            def anon(t):
                if isinstance(t, Anonymous):
                    v = self._fresh(_ANON)
                    self.anon_vars.append(v.name)
                    return v
                if isinstance(t, SubjectExpr):
                    return SubjectExpr(anon(t.subject), anon(t.prop))
                return t
            quals = node.qualifiers
            if isinstance(quals, AllQualifiers):
                var = self._fresh(_QUALS).name
                self.anon_vars.append(var)
                quals = _AllQ(var)
            else:
                quals = tuple((anon(q), anon(v)) for q, v in quals)
            return Pattern(anon(node.s), anon(node.p), anon(node.o), quals)
        if isinstance(node, And):
            return And(tuple(self._anonymize(i) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(self._anonymize(i) for i in node.items))
        if isinstance(node, Not):
            return Not(self._anonymize(node.item))
        return node

    def _check_path(self, term: PropertyPath) -> None:
        for prop in term.properties:
            if prop not in self.path_props:
                res = self._resolve(prop)
                if not res.found:
                    raise UnknownNameError(prop, res.suggestions)
                self.path_props[prop] = res.entity_id

    def _resolve_term(self, term, role: str, key: str | None = None):
        """Names become Bound values; nested terms keep their shape."""
        if isinstance(term, Name):
            return self._value(term.text, key) if role == "value" else self._entity(term.text)
        if isinstance(term, SubjectExpr):
            return SubjectExpr(self._resolve_term(term.subject, "entity"),
                               self._resolve_term(term.prop, "entity"))
        if isinstance(term, PropertyPath):
            self._check_path(term)
            return PropertyPath(self._resolve_term(term.base, "entity"), term.properties)
        return term

    def _flatten(self, term, prefix: list):
        """Replace a nested term in a pattern position by a hidden variable."""
        if isinstance(term, SubjectExpr):
            s = self._flatten(term.subject, prefix)
            p = self._flatten(term.prop, prefix)
            h = self._fresh("_h")
            prefix.append(Pattern(s, p, h, ()))
            return h
        if isinstance(term, PropertyPath):
            cur = self._flatten(term.base, prefix)
            for prop in term.properties:
                h = self._fresh("_p")
                prefix.append(Pattern(cur, Bound(Value.entity(self.path_props[prop])), h, ()))
                cur = h
            return cur
        return term

    def _lower(self, node):
        if isinstance(node, Pattern):
            key_name = node.p.text if isinstance(node.p, Name) else None
            s = self._resolve_term(node.s, "entity")
            p = self._resolve_term(node.p, "entity")
            o = self._resolve_term(node.o, "value", key_name)
            quals = node.qualifiers
            if not isinstance(quals, _AllQ):
                quals = tuple(
                    (self._resolve_term(q, "entity"),
                     self._resolve_term(v, "value", q.text if isinstance(q, Name) else None))
                    for q, v in quals)
            prefix: list = []
            s, p, o = (self._flatten(t, prefix) for t in (s, p, o))
            if not isinstance(quals, _AllQ):
                quals = tuple((self._flatten(q, prefix), self._flatten(v, prefix)) for q, v in quals)
            pat = Pattern(s, p, o, quals)
            return And(tuple(prefix) + (pat,)) if prefix else pat
        if isinstance(node, Compare):
            side = lambda t: t if isinstance(t, AggCall) else self._resolve_term(t, "value")  # noqa: E731
            return Compare(side(node.lhs), node.op, side(node.rhs))
        if isinstance(node, Match):
            return Match(self._resolve_term(node.operand, "value"), node.template)
        if isinstance(node, And):
            return And(tuple(self._lower(i) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(self._lower(i) for i in node.items))
        if isinstance(node, Not):
            return Not(self._lower(node.item))
        return node

    # execution --------------------------------------------------------------

    def term_values(self, term, row: BindingRow) -> list[Value]:
        if isinstance(term, Bound):
            return [term.value]
        if isinstance(term, Var):
            v = row.get(term.name)
            return [] if v is None else [v]
        if isinstance(term, PropertyPath):
            out = []
            for b in self.term_values(term.base, row):
                out.extend(resolve_path(self.store, b, term.properties))
            return out
        if isinstance(term, SubjectExpr):
            out = []
            for s in self.term_values(term.subject, row):
                for p in self.term_values(term.prop, row):
                    if p.is_entity:
                        out.extend(objects_of(self.store, s, p.payload, self.expand_rules))
            return out
        return []

    def _text_of(self, v: Value) -> str:
        if v.is_entity:
            return self.store.get(v.payload).canonical_name
        if v.tag == TEXT:
            return v.payload
        return str(v)

    def _row_true(self, node, row: BindingRow) -> bool:
        if isinstance(node, BoolConst):
            return node.value
        if isinstance(node, Compare):
            lhs = self.term_values(node.lhs, row)
            rhs = self.term_values(node.rhs, row)
            return any(compare(a, node.op, b) is TriState.TRUE for a in lhs for b in rhs)
        if isinstance(node, Match):
            return any(match_template(node.template, self._text_of(v))
                       for v in self.term_values(node.operand, row))
        return bool(self.eval_node(node, [row]))

    def _agg_filter(self, node: Compare, rows: list[BindingRow]) -> list[BindingRow]:
        """A comparison with an aggregate: aggregate per group of the other variables."""
        args = {side.arg.name for side in (node.lhs, node.rhs) if isinstance(side, AggCall)}
        groups: dict[tuple, list[BindingRow]] = {}
        for r in rows:
            k = tuple(sorted((n, v.key()) for n, v in r.values.items()
                             if n not in args and not (n.startswith(_LOCAL_PREFIXES))))
            groups.setdefault(k, []).append(r)
        out = []
        for members in groups.values():
            def side_values(side):
                if isinstance(side, AggCall):
                    vals = [m[side.arg.name] for m in members if side.arg.name in m]
                    return [aggregate(side.func, vals)]
                return self.term_values(side, members[0])
            ok = any(compare(a, node.op, b) is TriState.TRUE
                     for a in side_values(node.lhs) for b in side_values(node.rhs))
            if ok:
                out.extend(members)
        order = {id(r): i for i, r in enumerate(rows)}
        return sorted(out, key=lambda r: order[id(r)])

    def _bind(self, values: dict, term, value: Value) -> bool:
        if isinstance(term, Var):
            cur = values.get(term.name)
            if cur is None:
                values[term.name] = value
                return True
            return cur.key() == value.key()
        if isinstance(term, Bound):
            return term.value.key() == value.key()
        return False

    def _fixed(self, term, row: BindingRow) -> Value | None:
        if isinstance(term, Bound):
            return term.value
        if isinstance(term, Var):
            return row.get(term.name)
        return None

    def match_pattern(self, pat: Pattern, row: BindingRow) -> list[BindingRow]:
        s, p, o = (self._fixed(t, row) for t in (pat.s, pat.p, pat.o))
        if (s is not None and not s.is_entity) or (p is not None and not p.is_entity):
            return []
        fixed_quals, open_quals = [], []
        if not isinstance(pat.qualifiers, _AllQ):
            for q, v in pat.qualifiers:
                qv, vv = self._fixed(q, row), self._fixed(v, row)
                if qv is not None and not qv.is_entity:
                    return []
                if qv is not None and vv is not None:
                    fixed_quals.append((qv.payload, vv))
                else:
                    open_quals.append((q, v))
        spo = SpoPattern(s.payload if s else None, p.payload if p else None, o, tuple(fixed_quals))
        out = []
        for st in self.store.lookup(spo):
            values = dict(row.values)
            if not (self._bind(values, pat.s, Value.entity(st.s))
                    and self._bind(values, pat.p, Value.entity(st.p))
                    and self._bind(values, pat.o, st.o)):
                continue
            if isinstance(pat.qualifiers, _AllQ):
                if not self._bind(values, Var(pat.qualifiers.var), Value(QUALIFIERS, st.qualifiers)):
                    continue
                partials = [values]
            else:
                partials = [values]
                for q, v in open_quals:
                    nxt = []
                    for part in partials:
                        for sq, sv in st.qualifiers:
                            cand = dict(part)
                            if self._bind(cand, q, Value.entity(sq)) and self._bind(cand, v, sv):
                                nxt.append(cand)
                    partials = nxt
                    if not partials:
                        break
            prov = row.provenance | {st.id}
            out.extend(BindingRow(vals, prov) for vals in partials)
        return out

    def _score(self, node, bound: set[str]) -> int:
        if not isinstance(node, Pattern):
            return -1
        score = 0
        for t in (node.s, node.p, node.o):
            if isinstance(t, Bound) or (isinstance(t, Var) and t.name in bound):
                score += 1
        return score

    def eval_node(self, node, rows: list[BindingRow]) -> list[BindingRow]:
        if not rows:
            return []
        if isinstance(node, Pattern):
            out = []
            for r in rows:
                out.extend(self.match_pattern(node, r))
            return out
        if isinstance(node, And):
            gens = [i for i in node.items if _is_generator(i)]
            conds = [i for i in node.items if not _is_generator(i)]
            bound = set(rows[0].values)
            while gens:
                best = max(range(len(gens)), key=lambda i: (self._score(gens[i], bound), -i))
                item = gens.pop(best)
                rows = self.eval_node(item, rows)
                if not rows:
                    return []
                bound = set(rows[0].values)
            for c in conds:
                rows = self.eval_node(c, rows)
            return rows
        if isinstance(node, Or):
            out = []
            for item in node.items:
                out.extend(self.eval_node(item, rows))
            return _dedup(out)
        if isinstance(node, Not):
            return [r for r in rows if not self.eval_node(node.item, [r])]
        if _has_agg(node):
            return self._agg_filter(node, rows)
        return [r for r in rows if self._row_true(node, r)]


def _drop_locals(rows: list[BindingRow]) -> list[BindingRow]:
    out = []
    for r in rows:
        vals = {k: v for k, v in r.values.items() if not k.startswith(_LOCAL_PREFIXES)}
        out.append(BindingRow(vals, r.provenance))
    return _dedup(out)


def _columns(query: Query, ev: _Evaluator) -> list[tuple[Column, object]]:
    if query.ans is not None:
        out = []
        for term in query.ans:
            label = _key_label(term)
            out.append((Column(label, label), term))
        return out
    cols = [(Column(v, v), Var(v)) for v in query_variables(query)]
    for i, name in enumerate(ev.anon_vars):
        if name.startswith(_QUALS):
            label = "(?)"
        else:
            label = "?" if i == 0 else f"?{i + 1}"
        cols.append((Column(name, label), Var(name)))
    return cols


def _project(rows: list[BindingRow], cols, store: Store) -> list[BindingRow]:
    out = []
    for r in rows:
        per_col = []
        for col, term in cols:
            vals = _key_values(r, term, store)
            per_col.append([(col.key, v) for v in vals] or [None])
        for combo in itertools.product(*per_col):
            values = dict(kv for kv in combo if kv is not None)
            out.append(BindingRow(values, r.provenance))
    return _dedup(out)


def evaluate(query: Query, store: Store, *, expand_rules: bool = True, fuzzy: bool = True,
             progress: Callable[[int], None] | None = None,
             page_size: int = PAGE_SIZE) -> ResultSet:
    """Run ``query`` against ``store``.

    Raises UnknownNameError (with fuzzy suggestions) when a subject, property
    or qualifier name does not resolve.
    """
    ev = _Evaluator(store, expand_rules=expand_rules, fuzzy=fuzzy)
    prepared = []
    for st in query.statements:
        if isinstance(st, PatternStatement):
            prepared.append(PatternStatement(ev.prepare(st.tree)))
        elif isinstance(st, FilterClause):
            prepared.append(FilterClause(ev.prepare(st.condition)))
        else:
            prepared.append(st)
    for term in [k.key for k in query.order_by] + list(query.ans or ()) + (
            [query.group_by] if query.group_by is not None else []):
        if isinstance(term, PropertyPath):
            ev._check_path(term)

    result = ResultSet(page_size=page_size)
    rows = [BindingRow({})]
    for st in prepared:
        if isinstance(st, PatternStatement):
            rows = _drop_locals(ev.eval_node(st.tree, rows))
        elif isinstance(st, FilterClause):
            rows = [r for r in rows if ev.eval_node(st.condition, [r])]
        else:
            rows = _assign(st, rows, query, store, result)

    if progress is not None and len(rows) > PROGRESS_THRESHOLD:
        progress(len(rows))
    for key in reversed(query.order_by):
        rows = order_rows(rows, key.key, key.descending, store)
    cols = _columns(query, ev)
    result.columns = [c for c, _ in cols]
    if query.group_by is not None:
        result.group_label = _key_label(query.group_by)
        result.groups = []
        for g in group_rows(rows, query.group_by, store):
            result.groups.append(Group(g.key, g.label, _project(g.rows, cols, store)))
        result.rows = [r for g in result.groups for r in g.rows]
    else:
        result.rows = _project(rows, cols, store)
    result.reports = list(ev.reports.values())
    return result


def _assign(st: Assignment, rows: list[BindingRow], query: Query, store: Store,
            result: ResultSet) -> list[BindingRow]:
    """Bind ``?v = f(?arg)`` on every row, aggregating over all rows so far."""
    if query.group_by is not None and rows and all(
            _key_values(r, query.group_by, store) for r in rows[:1]):
        buckets = [(g.label, g.rows) for g in group_rows(rows, query.group_by, store)]
    else:
        buckets = [(None, rows)]
    out: dict[int, BindingRow] = {}
    for label, members in buckets:
        vals = [r[st.arg.name] for r in members if st.arg.name in r]
        value = aggregate(st.func, vals)
        if label is None:
            result.aggregates[st.var.name] = value
        if st.func in ("max", "min"):
            # annotate with the variables that tell the aggregated rows apart
            varying = {k for k in {k for r in members for k in r.values}
                       if len({r[k].key() if k in r else None for r in members}) > 1}
            varying.discard(st.arg.name)
            for r in members:
                if st.arg.name in r and r[st.arg.name].key() == value.key():
                    keep = {k: v for k, v in r.values.items() if k in varying or len(members) == 1}
                    result.extremes.setdefault(st.var.name, []).append(BindingRow(keep, r.provenance))
        for r in members:
            if id(r) not in out:
                out[id(r)] = BindingRow({**r.values, st.var.name: value}, r.provenance)
    return [out[id(r)] for r in rows if id(r) in out]
