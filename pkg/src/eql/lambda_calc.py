"""Render queries as lambda-calculus terms.

    >>> to_lambda(parse_query("(? : children): BirthPlace: New York"))
    'λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)'

Predicates take the property name as written in the query. Constants take
the entity's display name when a store is supplied. Queries outside the
supported subset give an :class:`Unsupported` value naming the constructs.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from eql.ast import (
    AllQualifiers, Anonymous, And, Assignment, BoolConst, Compare, FilterClause, Match, Name,
    Not, Or, Pattern, PatternStatement, PropertyPath, Query, Suggestion, SubjectExpr, Var,
)


# -- terms ----------------------------------------------------------------


@dataclass(frozen=True)
class Abstraction:
    var: str
    body: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class PredicateApp:
    name: str
    args: tuple


@dataclass(frozen=True)
class Conj:
    items: tuple


@dataclass(frozen=True)
class Disj:
    items: tuple


@dataclass(frozen=True)
class Neg:
    item: object


@dataclass(frozen=True)
class ArgMax:
    domain: Abstraction
    value: Abstraction
    minimize: bool = False


@dataclass(frozen=True)
class CountTerm:
    abstraction: Abstraction


@dataclass(frozen=True)
class Unsupported:
    constructs: tuple[str, ...]

    def __str__(self) -> str:
        return f"unsupported({', '.join(self.constructs)})"


@dataclass(frozen=True)
class _V:
    """A variable occurrence inside a predicate application."""

    name: str


UNICODE = {"lambda": "λ", "exists": "∃", "and": " ∧ ", "or": " ∨ ", "not": "¬"}
ASCII = {"lambda": "lambda ", "exists": "exists ", "and": " & ", "or": " | ", "not": "!"}

_FRESH = "xyzwvutsrqponmkhgfedcba"


def camel_case(text: str) -> str:
    """``"instance of"`` to ``InstanceOf``, ``"U.S. state"`` to ``USState``."""
    if re.fullmatch(r"-?\d+(\.\d+)?", text.strip()):
        return text.strip()
    words = []
    for word in text.split():
        kept = "".join(ch for ch in word if ch.isalnum())
        if kept:
            words.append(kept[0].upper() + kept[1:])
    return "".join(words) or "_"


# -- translation ----------------------------------------------------------


class _Translator:
    def __init__(self, query: Query, store):
        self.query = query
        self.store = store
        self.problems: list[str] = []
        self.user_vars = _user_vars(query)
        self.taken = set(self.user_vars)
        self.answers: list[str] = []
        self._fresh_n = 0

    def problem(self, what: str) -> None:
        if what not in self.problems:
            self.problems.append(what)

    def fresh(self) -> str:
        while True:
            i = self._fresh_n
            self._fresh_n += 1
            name = _FRESH[i] if i < len(_FRESH) else f"v{i - len(_FRESH) + 1}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def constant(self, text: str) -> str:
        if self.store is not None:
            ent = self.store.find(text)
            if ent is not None:
                return camel_case(self.store.display_name(ent))
        return camel_case(text)

    # term positions; atoms produced by subject expressions go to ``out``
    def arg(self, term, out: list):
        if isinstance(term, Var):
            return _V(term.name)
        if isinstance(term, Anonymous):
            v = self.fresh()
            self.answers.append(v)
            return _V(v)
        if isinstance(term, Name):
            return self.constant(term.text)
        if isinstance(term, SubjectExpr):
            subj = self.arg(term.subject, out)
            v = self.fresh()
            out.append(PredicateApp(self.predicate(term.prop), (subj, _V(v))))
            return _V(v)
        if isinstance(term, PropertyPath):
            self.problem("property path")
        else:
            self.problem(type(term).__name__)
        return "_"

    def predicate(self, term) -> str:
        if isinstance(term, Name):
            return camel_case(term.text)
        self.problem("variable property")
        return "_"

    def pattern(self, pat: Pattern) -> list:
        out: list = []
        subj = self.arg(pat.s, out)
        pred = self.predicate(pat.p)
        obj = self.arg(pat.o, out)
        if isinstance(pat.qualifiers, AllQualifiers):
            self.problem("(?)")
            return out
        queried = any(not isinstance(t, Name) for q, v in pat.qualifiers for t in (q, v))
        if not queried:
            out.append(PredicateApp(pred, (subj, obj)))
            return out
        event = _V(self.fresh())
        out.append(PredicateApp(pred, (event, subj, obj)))
        for q, v in pat.qualifiers:
            out.append(PredicateApp(self.predicate(q), (event, self.arg(v, out))))
        return out

    def node(self, node) -> list:
        """Conjuncts for ``node``."""
        if isinstance(node, Pattern):
            return self.pattern(node)
        if isinstance(node, And):
            return [c for item in node.items for c in self.node(item)]
        if isinstance(node, Or):
            return [Disj(tuple(_conj(self.node(item)) for item in node.items))]
        if isinstance(node, Not):
            return [Neg(_conj(self.node(node.item)))]
        if isinstance(node, Match):
            self.problem("template match")
        elif isinstance(node, Compare):
            self.problem("comparison")
        elif isinstance(node, BoolConst):
            self.problem("boolean constant")
        return []

    def translate(self):
        q = self.query
        if q.order_by:
            self.problem("\\order by")
        if q.group_by is not None:
            self.problem("\\group by")
        conjuncts: list = []
        assignments = []
        for st in q.statements:
            if isinstance(st, PatternStatement):
                conjuncts.extend(self.node(st.tree))
            elif isinstance(st, FilterClause):
                self.problem("\\filter")
            elif isinstance(st, Assignment):
                assignments.append(st)
        if q.ans is not None:
            if any(not isinstance(a, Var) for a in q.ans):
                self.problem("ANS path")
            answers = [a.name for a in q.ans if isinstance(a, Var)]
        else:
            answers = self.answers + [v for v in self.user_vars if v not in self.answers]
        if len(assignments) > 1:
            self.problem("several assignments")
        if self.problems:
            return Unsupported(tuple(self.problems))
        if assignments:
            return self.aggregate(assignments[0], conjuncts)
        positive = _free([c for c in conjuncts if not isinstance(c, Neg)])
        answers = [v for v in answers if v in positive]
        return _abstract(answers, _close(conjuncts, set(answers)))

    def aggregate(self, asg: Assignment, conjuncts: list):
        target = asg.arg.name
        if asg.func == "count":
            return CountTerm(_abstract([target], _close(conjuncts, {target})))
        if asg.func not in ("max", "min"):
            return Unsupported((f"{asg.func}()",))
        value_part = [c for c in conjuncts if target in _free([c])]
        domain_part = [c for c in conjuncts if target not in _free([c])]
        domain_vars = [v for v in _ordered_free(value_part) if v != target]
        if not value_part or len(domain_vars) != 1:
            return Unsupported((f"{asg.func}() over this pattern shape",))
        d = domain_vars[0]
        if not domain_part:
            # the domain is whatever has a value at all
            domain_part = value_part
        if (_free(value_part) - {d, target}) & _free(domain_part):
            return Unsupported((f"{asg.func}() over this pattern shape",))
        return ArgMax(
            Abstraction(d, _close(domain_part, {d})),
            Abstraction(d, Abstraction(target, _close(value_part, {d, target}))),
            minimize=asg.func == "min",
        )


def _user_vars(query: Query) -> list[str]:
    from eql.ast import query_variables

    return [v for v in query_variables(query) if not v.startswith("_")]


def _conj(items: list):
    return items[0] if len(items) == 1 else Conj(tuple(items))


def _abstract(vars_, body):
    for v in reversed(vars_):
        body = Abstraction(v, body)
    return body


def _atoms(term):
    if isinstance(term, PredicateApp):
        yield term
    elif isinstance(term, (Conj, Disj)):
        for item in term.items:
            yield from _atoms(item)
    elif isinstance(term, Neg):
        yield from _atoms(term.item)
    elif isinstance(term, (Exists, Abstraction)):
        yield from _atoms(term.body)


def _bound_in(term) -> set[str]:
    if isinstance(term, (Exists, Abstraction)):
        return {term.var} | _bound_in(term.body)
    if isinstance(term, (Conj, Disj)):
        return set().union(*(_bound_in(i) for i in term.items))
    if isinstance(term, Neg):
        return _bound_in(term.item)
    return set()


def _ordered_free(terms) -> list[str]:
    seen: dict[str, None] = {}
    for term in terms:
        bound = _bound_in(term)
        for atom in _atoms(term):
            for a in atom.args:
                if isinstance(a, _V) and a.name not in bound:
                    seen.setdefault(a.name)
    return list(seen)


def _free(terms) -> set[str]:
    return set(_ordered_free(terms))


def _close(conjuncts: list, keep: set[str]):
    """Conjunction with every variable outside ``keep`` existentially bound.

    A variable that only occurs under one negation is bound inside it.
    """
    counts = Counter()
    for c in conjuncts:
        for atom in _atoms(c):
            counts.update({a.name for a in atom.args if isinstance(a, _V)})

    def scope(term):
        if isinstance(term, Neg):
            inner = Counter()
            for atom in _atoms(term.item):
                inner.update({a.name for a in atom.args if isinstance(a, _V)})
            local = [v for v in _ordered_free([term.item])
                     if v not in keep and inner[v] == counts[v]]
            body = scope(term.item)
            for v in reversed(local):
                body = Exists(v, body)
            return Neg(body)
        if isinstance(term, Conj):
            return Conj(tuple(scope(i) for i in term.items))
        if isinstance(term, Disj):
            return Disj(tuple(scope(i) for i in term.items))
        return term

    body = _conj([scope(c) for c in conjuncts]) if conjuncts else PredicateApp("True", ())
    for v in reversed([v for v in _ordered_free([body]) if v not in keep]):
        body = Exists(v, body)
    return body


# -- rendering ------------------------------------------------------------


def render(term, ascii: bool = False) -> str:
    g = ASCII if ascii else UNICODE

    def r(t, ctx: str = "top") -> str:
        if isinstance(t, Abstraction):
            text = f"{g['lambda']}{t.var}.{r(t.body)}"
        elif isinstance(t, Exists):
            text = f"{g['exists']}{t.var}.{r(t.body)}"
        elif isinstance(t, PredicateApp):
            args = ", ".join(a.name if isinstance(a, _V) else a for a in t.args)
            return f"{t.name}({args})"
        elif isinstance(t, Conj):
            text = g["and"].join(r(i, "and") for i in t.items)
        elif isinstance(t, Disj):
            text = g["or"].join(r(i, "or") for i in t.items)
        elif isinstance(t, Neg):
            return g["not"] + r(t.item, "not")
        elif isinstance(t, ArgMax):
            fn = "argmin" if t.minimize else "argmax"
            return f"{fn}({r(t.domain)}, {r(t.value)})"
        elif isinstance(t, CountTerm):
            return f"count({r(t.abstraction)})"
        else:
            raise TypeError(f"not a lambda term: {t!r}")
        if ctx == "top":
            return text
        return f"({text})"

    return r(term)


def to_lambda(query, store=None, ascii: bool = False):
    """Lambda text for ``query``, or an :class:`Unsupported` value."""
    if isinstance(query, Suggestion):
        return Unsupported(("\\suggest",))
    result = _Translator(query, store).translate()
    if isinstance(result, Unsupported):
        return result
    return render(result, ascii)


def normalize_whitespace(text: str) -> str:
    """Drop all whitespace. Renderings are compared in this form, so
    ``Birth Place(y, New York)`` and ``BirthPlace(y,NewYork)`` agree."""
    return "".join(text.split())


def same_rendering(a: str, b: str) -> bool:
    return normalize_whitespace(a) == normalize_whitespace(b)


# -- well-formedness ------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(λ|∃|lambda\b|exists\b)|([().,∧∨¬&|!])|(-?\d+\.\d+(?!\w)|-?\w+))")
_VAR = re.compile(r"[a-z]\d*$")


def check_well_formed(text: str) -> None:
    """Raise ValueError unless ``text`` is a balanced, closed lambda term."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"unexpected character at {pos}: {text[pos]!r}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()
    tokens.append(None)
    i = 0
    scope: list[str] = []

    def peek():
        return tokens[i]

    def take(expected=None):
        nonlocal i
        tok = tokens[i]
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"expected {expected or 'a token'}, found {tok!r}")
        i += 1
        return tok

    def term():
        if peek() in ("λ", "∃", "lambda", "exists"):
            take()
            var = take()
            if not _VAR.match(var):
                raise ValueError(f"bad bound variable {var!r}")
            if var in scope:
                raise ValueError(f"variable {var!r} bound twice")
            take(".")
            scope.append(var)
            term()
            scope.pop()
            return
        disj()

    def disj():
        conj()
        while peek() in ("∨", "|"):
            take()
            conj()

    def conj():
        unary()
        while peek() in ("∧", "&"):
            take()
            unary()

    def unary():
        if peek() in ("¬", "!"):
            take()
            unary()
        else:
            atom()

    def atom():
        if peek() == "(":
            take("(")
            term()
            take(")")
            return
        name = take()
        if name in "().,":
            raise ValueError(f"unexpected {name!r}")
        take("(")
        if peek() != ")":
            argument()
            while peek() == ",":
                take(",")
                argument()
        take(")")

    def argument():
        tok = peek()
        if tok in ("λ", "lambda", "∃", "exists", "(", "¬", "!") or tokens[i + 1] == "(":
            term()
            return
        take()
        if _VAR.match(tok) and tok not in scope:
            raise ValueError(f"free variable {tok!r}")

    term()
    if peek() is not None:
        raise ValueError(f"trailing input at {peek()!r}")
