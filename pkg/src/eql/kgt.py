"""KGT: the line-oriented UTF-8 text format for graphs.

::

    # comment
    @entity ehm001001 George Bernard Shaw
    @alias place of birth = BirthPlace
    @default Dublin = Dublin_Ireland
    @rule maternal grandfather (x, y) = (x : mother) : father : y
    George Bernard Shaw : award : Nobel Prize in Literature (date : 1925, prize : 118165 SEK)

A fact whose property is ``alias`` also registers its object as an alias of
its subject. A value written in double quotes is always text.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field

from eql.errors import EQLError, EQLSyntaxError
from eql.lexer import escape_name
from eql.parser import parse_fact
from eql.store import ENTITY_KIND, PROPERTY_KIND, Store
from eql.values import TEXT, Value, parse_value

ALIAS_PROPERTY = "alias"

_RULE_RE = re.compile(r"^@rule\s+(.+?)\s*\(\s*x\s*,\s*y\s*\)\s*=\s*(.+)$")


@dataclass
class LoadReport:
    statements: int = 0
    property_aliases: int = 0
    entity_aliases: int = 0
    rules: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def aliases(self) -> int:
        return self.property_aliases + self.entity_aliases

    def __str__(self) -> str:
        text = (f"{self.statements} statements, {self.property_aliases} property aliases, "
                f"{self.entity_aliases} entity aliases, {self.rules} rules")
        for line, msg in self.errors:
            text += f"\n  line {line}: {msg}"
        return text


def _read(source) -> str:
    """Text of ``source``: a str of KGT text, bytes, a path object or a file."""
    if isinstance(source, str):
        return source
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EQLError(f"graph source is not valid UTF-8: {exc}") from None


def _unquote(text: str) -> str | None:
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    return None


def value_from_text(store: Store, text: str, key: str | None) -> Value:
    """Entity if ``text`` names one, otherwise a literal."""
    quoted = _unquote(text)
    if quoted is not None:
        return Value.text(quoted)
    ent = store.find(text)
    if ent is not None:
        return Value.entity(ent)
    return parse_value(text, key)


def _is_alias_property(store: Store, name: str) -> bool:
    pid = store.find(name)
    if pid is None:
        return name.casefold() == ALIAS_PROPERTY
    return store.get(pid).canonical_name.casefold() == ALIAS_PROPERTY


def load_graph(store: Store, source, origin: str = "<kgt>") -> LoadReport:
    """Load KGT text into ``store``. Bad lines are reported and skipped."""
    text = _read(source)
    report = LoadReport()
    entities, aliases, defaults, rules, facts = [], [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@entity"):
            entities.append((lineno, line))
        elif line.startswith("@alias"):
            aliases.append((lineno, line))
        elif line.startswith("@default"):
            defaults.append((lineno, line))
        elif line.startswith("@rule"):
            rules.append((lineno, line))
        elif line.startswith("@"):
            report.errors.append((lineno, f"unknown directive {line.split()[0]}"))
        else:
            try:
                facts.append((lineno, parse_fact(line, lineno)))
            except EQLSyntaxError as exc:
                report.errors.append((lineno, exc.message))

    with store.lock:
        for lineno, line in entities:
            parts = line.split(None, 2)
            if len(parts) < 3:
                report.errors.append((lineno, "@entity needs an id and a name"))
                continue
            kind = PROPERTY_KIND if parts[1].startswith("p") else ENTITY_KIND
            try:
                store.add_entity(parts[1], parts[2], kind)
            except EQLError as exc:
                report.errors.append((lineno, str(exc)))

        pending_defaults = []
        for lineno, line in defaults:
            if not _apply_default(store, lineno, line, report, final=False):
                pending_defaults.append((lineno, line))

        _create_missing(store, facts, aliases_only=True)
        for lineno, fact in facts:
            if _is_alias_property(store, fact.p):
                _register_alias(store, lineno, fact.s, fact.o, report)
        for lineno, line in aliases:
            name, sep, alias = line[len("@alias"):].partition("=")
            if not sep or not name.strip() or not alias.strip():
                report.errors.append((lineno, "@alias needs '<name> = <alias>'"))
                continue
            _register_alias(store, lineno, name.strip(), alias.strip(), report)
        for lineno, line in pending_defaults:
            _apply_default(store, lineno, line, report, final=True)
        _create_missing(store, facts, aliases_only=False)

        for lineno, fact in facts:
            try:
                before = len(store)
                _add_fact(store, fact)
                report.statements += len(store) - before
            except EQLError as exc:
                report.errors.append((lineno, str(exc)))

        for lineno, line in rules:
            m = _RULE_RE.match(line)
            if not m:
                report.errors.append((lineno, "@rule needs '<property> (x, y) = <body>'"))
                continue
            from eql.rewrite import define_rule

            try:
                define_rule(store, m.group(1), m.group(2))
                report.rules += 1
            except EQLError as exc:
                report.errors.append((lineno, str(exc)))
    return report


def _apply_default(store, lineno, line, report, final: bool) -> bool:
    surface, sep, target = line[len("@default"):].partition("=")
    if not sep or not surface.strip() or not target.strip():
        report.errors.append((lineno, "@default needs '<surface> = <qualified name>'"))
        return True
    ent = store.find(target.strip())
    if ent is None:
        if final:
            report.errors.append((lineno, f"unknown entity {target.strip()!r}"))
        return False
    store.set_default(surface.strip(), ent)
    return True


def _register_alias(store, lineno, name, alias, report) -> None:
    ent = store.find(name)
    alias = _unquote(alias) or alias
    if ent is None:
        report.errors.append((lineno, f"alias for unknown name {name!r}"))
        return
    if store.add_alias(ent, alias):
        if store.get(ent).kind == PROPERTY_KIND:
            report.property_aliases += 1
        else:
            report.entity_aliases += 1


def _create_missing(store: Store, facts, aliases_only: bool) -> None:
    """Give subject, property and qualifier names in ``facts`` an entity.

    Alias facts go first so later facts can use the aliases they declare.
    """
    for _, fact in facts:
        if aliases_only and not _is_alias_property(store, fact.p):
            continue
        for name in [fact.p, *(q for q, _ in fact.qualifiers)]:
            if store.find(name) is None:
                store.new_entity(name, PROPERTY_KIND)
    used_as_property = {name.casefold() for _, f in facts for name in [f.p, *(q for q, _ in f.qualifiers)]}
    for _, fact in facts:
        if aliases_only and not _is_alias_property(store, fact.p):
            continue
        if store.find(fact.s) is None:
            kind = PROPERTY_KIND if fact.s.casefold() in used_as_property else ENTITY_KIND
            store.new_entity(fact.s, kind)


def _add_fact(store: Store, fact) -> int:
    s = store.find(fact.s)
    p = store.find(fact.p)
    if s is None or p is None:
        raise EQLError(f"unknown name in {fact.s!r} : {fact.p!r}")
    if _is_alias_property(store, fact.p):
        o = Value.text(_unquote(fact.o) or fact.o)
    else:
        o = value_from_text(store, fact.o, fact.p)
    quals = []
    for qname, vtext in fact.qualifiers:
        q = store.find(qname)
        if q is None:
            raise EQLError(f"unknown qualifier {qname!r}")
        quals.append((q, value_from_text(store, vtext, qname)))
    return store.add_statement(s, p, o, quals)


# -- saving ---------------------------------------------------------------


def name_for(store: Store, entity_id: str) -> str:
    """A surface name that resolves back to ``entity_id``."""
    name = store.get(entity_id).canonical_name
    return name if store.find(name) == entity_id else entity_id


def value_text(store: Store, value: Value, key: str | None) -> str:
    if value.is_entity:
        return escape_name(name_for(store, value.payload))
    text = str(value)
    if value.tag != TEXT:
        return escape_name(text)
    reparsed = value_from_text(store, text, key)
    if reparsed.key() != value.key() or text != text.strip() or not text:
        return escape_name('"' + text + '"')
    return escape_name(text)


def format_statement(store: Store, st) -> str:
    pname = name_for(store, st.p)
    head = " : ".join([escape_name(name_for(store, st.s)), escape_name(pname),
                       value_text(store, st.o, pname)])
    if not st.qualifiers:
        return head
    quals = ", ".join(
        f"{escape_name(name_for(store, q))} : {value_text(store, v, store.get(q).canonical_name)}"
        for q, v in st.qualifiers)
    return f"{head} ({quals})"


def save_graph(store: Store) -> str:
    from eql.parser import pretty_print

    out = io.StringIO()
    for ent in store.entities.values():
        out.write(f"@entity {ent.id} {ent.canonical_name}\n")
    for ent in store.entities.values():
        for alias in ent.aliases:
            out.write(f"@alias {name_for(store, ent.id)} = {alias}\n")
    for surface, entity_id in store._defaults.values():
        out.write(f"@default {surface} = {name_for(store, entity_id)}\n")
    for rule in store.rules.values():
        body = " ".join(pretty_print(rule.body).split())
        out.write(f"@rule {name_for(store, rule.head_property)} (x, y) = {body}\n")
    for sid in sorted(store.statements):
        out.write(format_statement(store, store.statements[sid]) + "\n")
    return out.getvalue()
