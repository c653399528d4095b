"""Recursive-descent parser for EQL queries, suggestions and ground facts.

Precedence of the logical operators is ``\\not`` > ``\\and`` > ``\\or``;
parentheses override. Statements are separated by commas and run in order.
"""

from __future__ import annotations

import re
from itertools import combinations

from eql.ast import (
    AGGREGATES, MAX_PATH, MAX_VARIABLES, AggCall, AllQualifiers, And, Anonymous,
    Assignment, BoolConst, Bound, Compare, Fact, FilterClause, Match, Name, Not,
    Or, OrderKey, Pattern, PatternStatement, PropertyPath, Query, SubjectExpr,
    Suggestion, Var, node_patterns, node_terms, walk_terms,
)
from eql.errors import EQLSyntaxError
from eql.lexer import Token, escape_name, tokenize

MAX_NESTING = 64


class AmbiguousSegmentationError(EQLSyntaxError):
    def __init__(self, splits):
        self.splits = splits
        shown = "; ".join(" : ".join(parts) for parts in splits)
        super().__init__(f"ambiguous segmentation: {shown}")


class NoSegmentationError(EQLSyntaxError):
    def __init__(self, text: str):
        super().__init__(f"cannot segment {text!r} into subject, property and object")


class _Parser:
    def __init__(self, tokens: list[Token], text: str, bare_vars=()):
        self.toks = tokens
        self.text = text
        self.pos = 0
        self.bare_vars = frozenset(bare_vars)
        self.depth = 0
        self.var_tokens: dict[str, Token] = {}

    # -- token helpers ----------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, kind: str, value: str | None = None, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind == kind and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.peek()
        if t is None:
            self.error("unexpected end of query")
        self.pos += 1
        return t

    def expect(self, kind: str, what: str) -> Token:
        if not self.at(kind):
            self.error(f"expected {what}")
        return self.advance()

    def error(self, message: str, tok: Token | None = None):
        if tok is None:
            tok = self.peek()
        if tok is None:
            lines = self.text.split("\n")
            raise EQLSyntaxError(message + " (at end of input)", len(lines), len(lines[-1]) + 1)
        found = f", found {tok.value!r}" if message.startswith("expected") else ""
        raise EQLSyntaxError(message + found, tok.line, tok.column)

    def _ans_start(self) -> bool:
        return self.at("NAME") and self.peek().value.casefold() == "ans" and self.at("VAR", k=1)

    # -- query ------------------------------------------------------------

    def query(self) -> Query:
        statements = []
        order = []
        group = None
        ans = None
        while self.at("COMMA"):
            self.advance()
        while self.peek() is not None:
            t = self.peek()
            if t.kind == "KW" and t.value == "filter":
                self.advance()
                statements.append(FilterClause(self.or_expr()))
            elif t.kind == "KW" and t.value == "order":
                self.advance()
                order.append(self.order_key())
            elif t.kind == "KW" and t.value == "group":
                self.advance()
                if group is not None:
                    self.error("only one \\group by clause is allowed", t)
                group = self.key_term()
            elif self._ans_start():
                self.advance()
                ans = self.ans_list()
                if self.peek() is not None:
                    self.error("ANS must be the last statement")
                break
            else:
                statements.append(self.statement())
            if self.at("COMMA"):
                while self.at("COMMA"):
                    self.advance()
            elif self.peek() is None or self._ans_start() or (
                    self.at("KW") and self.peek().value in ("filter", "order", "group")):
                continue
            else:
                self.error("expected ',' between statements")
        if not statements:
            self.error("empty query")
        return Query(tuple(statements), tuple(order), group, ans)

    def statement(self):
        if (self.at("VAR") and self.at("OP", "=", 1) and self.at("NAME", k=2)
                and self.peek(2).value.casefold() in AGGREGATES and self.at("LPAREN", k=3)):
            var = self._var(self.advance())
            self.advance()
            func = self.advance().value.casefold()
            self.advance()
            arg = self._var(self.expect("VAR", "a variable"))
            self.expect("RPAREN", "')'")
            return Assignment(var, func, arg)
        return PatternStatement(self.or_expr())

    def order_key(self) -> OrderKey:
        key = self.key_term()
        descending = False
        if self.at("NAME") and self.peek().value.casefold() in ("asc", "desc"):
            descending = self.advance().value.casefold() == "desc"
        elif isinstance(key, PropertyPath):
            last = key.properties[-1]
            head, _, word = last.rpartition(" ")
            if head and word.casefold() in ("asc", "desc"):
                descending = word.casefold() == "desc"
                key = PropertyPath(key.base, key.properties[:-1] + (head,))
        return OrderKey(key, descending)

    def key_term(self):
        tok = self.expect("VAR", "a variable")
        return self._path(self._var(tok))

    def ans_list(self) -> tuple:
        items = [self.key_term()]
        while self.at("COMMA"):
            while self.at("COMMA"):
                self.advance()
            if self.peek() is None:
                break
            items.append(self.key_term())
        return tuple(items)

    # -- conditions -------------------------------------------------------

    def or_expr(self):
        items = [self.and_expr()]
        while self.at("KW", "or"):
            self.advance()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_expr(self):
        items = [self.unary()]
        while self.at("KW", "and"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self):
        if self.at("KW", "not"):
            self.advance()
            self._enter()
            try:
                return Not(self.unary())
            finally:
                self.depth -= 1
        return self.element()

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            self.error("expression nested too deeply")

    def element(self):
        t = self.peek()
        if t is None:
            self.error("expected a statement or condition")
        if t.kind == "KW" and t.value in ("true", "false"):
            self.advance()
            return BoolConst(t.value == "true")
        save = self.pos
        try:
            return self.atom_condition()
        except EQLSyntaxError as first:
            if t.kind != "LPAREN":
                raise
            failed_at = self.pos
            self.pos = save
            self.advance()
            self._enter()
            try:
                node = self.or_expr()
                self.expect("RPAREN", "')'")
            except EQLSyntaxError as second:
                raise second if self.pos >= failed_at else first
            finally:
                self.depth -= 1
            return node

    def atom_condition(self):
        lhs = self.operand()
        t = self.peek()
        if t is not None and t.kind == "COLON" and not isinstance(lhs, AggCall):
            return self.pattern_rest(lhs)
        if t is not None and t.kind == "OP":
            self.advance()
            rhs = self.operand()
            return Compare(lhs, t.value, rhs)
        if t is not None and t.kind == "KW" and t.value == "match":
            self.advance()
            tmpl = self.expect("STRING", "a quoted template after \\match")
            if isinstance(lhs, AggCall):
                self.error("\\match needs a name or variable", t)
            return Match(lhs, tmpl.value)
        self.error("expected ':', a comparison operator or \\match")

    def operand(self):
        if (self.at("NAME") and self.peek().value.casefold() in AGGREGATES
                and self.at("LPAREN", k=1) and self.at("VAR", k=2) and self.at("RPAREN", k=3)):
            func = self.advance().value.casefold()
            self.advance()
            arg = self._var(self.advance())
            self.advance()
            return AggCall(func, arg)
        return self.term()

    def pattern_rest(self, s) -> Pattern:
        self.expect("COLON", "':'")
        ptok = self.peek()
        p = self.term()
        if not isinstance(p, (Name, Var, Anonymous)):
            self.error("the property position takes a name, variable or '?'", ptok)
        self.expect("COLON", "':'")
        o = self.term()
        quals = ()
        if self.at("LPAREN"):
            quals = self.qualifiers()
        return Pattern(s, p, o, quals)

    def qualifiers(self):
        self.advance()
        if self.at("ANON") and self.at("RPAREN", k=1):
            self.advance()
            self.advance()
            return AllQualifiers()
        items = []
        while True:
            qtok = self.peek()
            q = self.term()
            if not isinstance(q, (Name, Var, Anonymous)):
                self.error("a qualifier name must be a name, variable or '?'", qtok)
            self.expect("COLON", "':' inside the qualifier block")
            v = self.term()
            items.append((q, v))
            if self.at("COMMA"):
                self.advance()
                continue
            self.expect("RPAREN", "')' closing the qualifier block")
            return tuple(items)

    def term(self):
        t = self.peek()
        if t is None:
            self.error("expected a name, variable or '?'")
        if t.kind == "VAR":
            self.advance()
            return self._path(self._var(t))
        if t.kind == "ANON":
            self.advance()
            return Anonymous()
        if t.kind == "LPAREN":
            self.advance()
            self._enter()
            try:
                s = self.term()
                self.expect("COLON", "':' inside the subject expression")
                ptok = self.peek()
                p = self.term()
                if not isinstance(p, (Name, Var, Anonymous)):
                    self.error("the property position takes a name, variable or '?'", ptok)
                self.expect("RPAREN", "')' closing the subject expression")
            finally:
                self.depth -= 1
            return SubjectExpr(s, p)
        if t.kind == "NAME":
            parts = [self.advance().value]
            while self.at("NAME") and not self._ans_start():
                parts.append(self.advance().value)
            text = " ".join(parts)
            if text in self.bare_vars:
                return self._var(Token("VAR", text, t.line, t.column, t.offset))
            return Name(text)
        self.error("expected a name, variable or '?'")

    def _var(self, tok: Token) -> Var:
        self.var_tokens.setdefault(tok.value, tok)
        return Var(tok.value)

    def _path(self, base):
        props = []
        while self.at("DOT"):
            self.advance()
            props.append(self.expect("NAME", "a property name after '.'").value)
        if not props:
            return base
        if len(props) > MAX_PATH:
            self.error(f"property path longer than {MAX_PATH}")
        return PropertyPath(base, tuple(props))


# -- validation -----------------------------------------------------------


def _term_vars(term) -> set[str]:
    return {t.name for t in walk_terms(term) if isinstance(t, Var)}


def _node_vars(node) -> set[str]:
    out = set()
    for t in node_terms(node):
        if isinstance(t, Var):
            out.add(t.name)
    return out


def _pattern_vars(node) -> set[str]:
    out = set()
    for pat in node_patterns(node):
        out |= _node_vars(pat)
    return out


def _validate(query: Query, parser: _Parser) -> None:
    def fail(message, var=None):
        parser.error(message, parser.var_tokens.get(var) if var else (parser.toks[0] if parser.toks else None))

    all_vars = set()
    declared: set[str] = set()
    for st in query.statements:
        if isinstance(st, Assignment):
            if st.arg.name not in declared:
                fail(f"undeclared variable ?{st.arg.name}", st.arg.name)
            declared.add(st.var.name)
            all_vars |= {st.var.name, st.arg.name}
            continue
        node = st.tree if isinstance(st, PatternStatement) else st.condition
        used = _node_vars(node)
        all_vars |= used
        if isinstance(st, PatternStatement):
            bound = declared | _pattern_vars(node)
            for name in sorted(used - bound):
                fail(f"undeclared variable ?{name}", name)
            declared = bound
        else:
            for name in sorted(used - declared):
                fail(f"undeclared variable ?{name}", name)
        _check_anonymous(node, query.ans is not None, fail)
    extra = [k.key for k in query.order_by] + list(query.ans or ())
    if query.group_by is not None:
        extra.append(query.group_by)
    for term in extra:
        for name in sorted(_term_vars(term) - declared):
            fail(f"undeclared variable ?{name}", name)
        all_vars |= _term_vars(term)
    if len(all_vars) > MAX_VARIABLES:
        fail(f"more than {MAX_VARIABLES} variables")


def _check_anonymous(node, has_ans: bool, fail) -> None:
    for pat in node_patterns(node):
        count = sum(isinstance(t, Anonymous) for t in node_terms(pat))
        if isinstance(pat.qualifiers, AllQualifiers):
            count += 1
        if count > 1 and not has_ans:
            fail("use named variables for more than one unknown in a pattern")
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, (And, Or)):
            stack.extend(n.items)
        elif isinstance(n, Not):
            stack.append(n.item)
        elif isinstance(n, (Compare, Match)):
            if any(isinstance(t, Anonymous) for t in node_terms(n)):
                fail("'?' cannot be used inside a condition")


def parse_query(text: str, bare_vars=()) -> Query:
    """Parse EQL query text.

    ``bare_vars`` names that count as variables without a leading '?', as in
    rule bodies written ``(x : mother) : father : y``.
    """
    parser = _Parser(tokenize(text), text, bare_vars)
    if not parser.toks:
        raise EQLSyntaxError("empty query", 1, 1)
    query = parser.query()
    _validate(query, parser)
    return query


def parse_simplified(text: str, lexicon) -> Query:
    """Parse the colon-free form, e.g. ``? Capital Beijing`` or ``Bird good at ?``.

    Every three-way split of the words is tried; each named part must be in
    ``lexicon`` (compared case-insensitively) and exactly one split may fit.
    """
    words = text.replace("？", "?").split()
    known = {w.casefold() for w in lexicon}
    valid = []
    for i, j in combinations(range(1, len(words)), 2):
        parts = [" ".join(words[:i]), " ".join(words[i:j]), " ".join(words[j:])]
        if "?" not in parts:
            continue
        if all(part == "?" or part.casefold() in known for part in parts):
            valid.append(parts)
    if not valid:
        raise NoSegmentationError(text)
    if len(valid) > 1:
        raise AmbiguousSegmentationError(valid)
    colon_form = " : ".join(p if p == "?" else escape_name(p) for p in valid[0])
    return parse_query(colon_form)


def is_simplified(text: str) -> bool:
    """True for colon-free text that has a standalone '?' word."""
    text = text.replace("？", "?").replace("：", ":")
    if re.search(r"(?<!\\):", text) or text.lstrip().startswith("\\"):
        return False
    return "?" in text.split()


# -- facts and suggestions -------------------------------------------------


def _split_unescaped(text: str, sep: str) -> list[str]:
    parts, cur, i = [], [], 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            cur.append(text[i:i + 2])
            i += 2
            continue
        if ch == sep:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    parts.append("".join(cur))
    return parts


def _find_unescaped(text: str, ch: str) -> int:
    i = 0
    while i < len(text):
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == ch:
            return i
        i += 1
    return -1


def _clean(raw: str) -> str:
    from eql.lexer import unescape

    return " ".join(unescape(raw).split())


def parse_fact(text: str, line: int = 1) -> Fact:
    """Parse a ground statement ``s : p : o (q1: v1, q2: v2)``."""
    text = text.translate(str.maketrans({"？": "?", "：": ":", "（": "(", "）": ")", "，": ","}))
    text = " ".join(text.split())
    if _find_unescaped(text, "?") >= 0:
        raise EQLSyntaxError("a fact cannot contain an unescaped '?'", line, _find_unescaped(text, "?") + 1)
    open_at = _find_unescaped(text, "(")
    quals = ()
    head = text
    if open_at >= 0:
        head, block = text[:open_at], text[open_at + 1:]
        if not block.endswith(")") or _find_unescaped(block[:-1], ")") >= 0 \
                or _find_unescaped(block[:-1], "(") >= 0:
            raise EQLSyntaxError("qualifier block must close with ')' at the end of the line",
                                 line, open_at + 1)
        items = []
        for item in _split_unescaped(block[:-1], ","):
            kv = _split_unescaped(item, ":")
            if len(kv) < 2:
                raise EQLSyntaxError(f"qualifier {item.strip()!r} needs 'name : value'", line, open_at + 1)
            q, v = _clean(kv[0]), _clean(":".join(kv[1:]))
            if not q or not v:
                raise EQLSyntaxError("empty qualifier name or value", line, open_at + 1)
            items.append((q, v))
        quals = tuple(items)
    elif _find_unescaped(text, ")") >= 0:
        raise EQLSyntaxError("unbalanced ')'", line, _find_unescaped(text, ")") + 1)
    parts = _split_unescaped(head, ":")
    if len(parts) != 3:
        raise EQLSyntaxError(f"expected 's : p : o', found {len(parts)} part(s)", line, 1)
    s, p, o = (_clean(x) for x in parts)
    if not (s and p and o):
        raise EQLSyntaxError("empty subject, property or object", line, 1)
    return Fact(s, p, o, quals)


_SUGGEST_RE = re.compile(r"^\s*\\suggest\s+(add|change|delete)\b", re.IGNORECASE)
_REF_RE = re.compile(r"\\ref\d*\s*:?", re.IGNORECASE)
_CHANGE_RE = re.compile(r"\\changeTo\b", re.IGNORECASE)


def parse_suggestion(text: str) -> Suggestion:
    """Parse ``\\suggest add|change|delete`` text with optional ``\\ref`` sources."""
    m = _SUGGEST_RE.match(text)
    if not m:
        raise EQLSyntaxError("a suggestion starts with '\\suggest add', 'change' or 'delete'", 1, 1)
    kind = m.group(1).lower()
    rest = text[m.end():]
    refs_at = [r for r in _REF_RE.finditer(rest)]
    body = rest[:refs_at[0].start()] if refs_at else rest
    refs = []
    for i, r in enumerate(refs_at):
        end = refs_at[i + 1].start() if i + 1 < len(refs_at) else len(rest)
        ref = " ".join(rest[r.end():end].split()).rstrip(",").strip()
        if ref:
            refs.append(ref)
    parts = _CHANGE_RE.split(body)
    if kind == "change":
        if len(parts) != 2:
            raise EQLSyntaxError("'\\suggest change' needs exactly one \\changeTo", 1, 1)
        before, after = parse_fact(parts[0]), parse_fact(parts[1])
    else:
        if len(parts) != 1:
            raise EQLSyntaxError(f"\\changeTo is only valid in '\\suggest change'", 1, 1)
        before, after = parse_fact(parts[0]), None
    if kind == "delete" and before.qualifiers:
        raise EQLSyntaxError("'\\suggest delete' takes s : p : o only, without qualifiers", 1, 1)
    return Suggestion(kind, before, after, tuple(refs))


# -- pretty printing -------------------------------------------------------


def format_fact(fact: Fact) -> str:
    head = " : ".join(escape_name(x) for x in (fact.s, fact.p, fact.o))
    if not fact.qualifiers:
        return head
    quals = ", ".join(f"{escape_name(q)} : {escape_name(v)}" for q, v in fact.qualifiers)
    return f"{head} ({quals})"


def format_suggestion(sug: Suggestion) -> str:
    out = f"\\suggest {sug.kind} {format_fact(sug.before)}"
    if sug.after is not None:
        out += f" \\changeTo {format_fact(sug.after)}"
    for i, ref in enumerate(sug.refs, 1):
        out += f" \\ref{i}: {ref}"
    return out


def format_term(term, name_hook=None) -> str:
    if isinstance(term, Name):
        return name_hook(term.text) if name_hook else escape_name(term.text)
    if isinstance(term, Anonymous):
        return "?"
    if isinstance(term, Var):
        return "?" + term.name
    if isinstance(term, SubjectExpr):
        return f"({format_term(term.subject, name_hook)} : {format_term(term.prop, name_hook)})"
    if isinstance(term, PropertyPath):
        return format_term(term.base, name_hook) + "".join(
            "." + escape_name(p, path=True) for p in term.properties)
    if isinstance(term, Bound):
        return str(term.value)
    if isinstance(term, AggCall):
        return f"{term.func}(?{term.arg.name})"
    raise TypeError(f"not a term: {term!r}")


def format_node(node, name_hook=None) -> str:
    ft = lambda t: format_term(t, name_hook)  # noqa: E731
    if isinstance(node, Pattern):
        out = f"{ft(node.s)} : {ft(node.p)} : {ft(node.o)}"
        if isinstance(node.qualifiers, AllQualifiers):
            out += " (?)"
        elif node.qualifiers:
            out += " (" + ", ".join(f"{ft(q)} : {ft(v)}" for q, v in node.qualifiers) + ")"
        return out
    if isinstance(node, Compare):
        return f"{ft(node.lhs)} {node.op} {ft(node.rhs)}"
    if isinstance(node, Match):
        return f"{ft(node.operand)} \\match '{node.template.replace(chr(39), chr(92) + chr(39))}'"
    if isinstance(node, BoolConst):
        return "\\true" if node.value else "\\false"
    if isinstance(node, And):
        return " \\and ".join(_wrap(i, (And, Or), name_hook) for i in node.items)
    if isinstance(node, Or):
        return " \\or ".join(_wrap(i, (Or,), name_hook) for i in node.items)
    if isinstance(node, Not):
        return "\\not " + _wrap(node.item, (And, Or), name_hook)
    raise TypeError(f"not a condition: {node!r}")


def _wrap(node, needs_parens, name_hook) -> str:
    text = format_node(node, name_hook)
    return f"({text})" if isinstance(node, needs_parens) else text


def format_statement(st, name_hook=None) -> str:
    if isinstance(st, Assignment):
        return f"?{st.var.name} = {st.func}(?{st.arg.name})"
    if isinstance(st, FilterClause):
        return "    \\filter " + format_node(st.condition, name_hook)
    return format_node(st.tree, name_hook)


def pretty_print(query: Query, name_hook=None) -> str:
    """Canonical text: one statement per line, clauses indented on their own lines."""
    out = ""
    for i, st in enumerate(query.statements):
        text = format_statement(st, name_hook)
        if i == 0:
            out = text
        elif isinstance(st, FilterClause):
            out += "\n" + text
        else:
            out += ",\n" + text
    if query.group_by is not None:
        out += "\n    \\group by " + format_term(query.group_by)
    for key in query.order_by:
        out += f"\n    \\order by {format_term(key.key)} {'desc' if key.descending else 'asc'}"
    if query.ans is not None:
        out += ",\nANS " + ", ".join(format_term(t) for t in query.ans)
    return out
