"""In-memory store of entities, aliases and qualified spo statements."""

from __future__ import annotations

import copy
import re
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from eql.errors import EQLError, PropertyKindError, UnknownEntityError
from eql.similarity import FuzzySuggestion, suggest_similar
from eql.values import Value

ENTITY_KIND = "entity"
PROPERTY_KIND = "property"

_BAD_ID = re.compile(r"[\s:?]")


@dataclass
class Entity:
    id: str
    canonical_name: str
    aliases: list[str] = field(default_factory=list)
    kind: str = ENTITY_KIND


@dataclass(frozen=True)
class Statement:
    id: int
    s: str
    p: str
    o: Value
    qualifiers: tuple[tuple[str, Value], ...] = ()

    def key(self) -> tuple:
        return statement_key(self.s, self.p, self.o, self.qualifiers)

    def qualifier_values(self, q: str) -> list[Value]:
        return [v for k, v in self.qualifiers if k == q]


def statement_key(s: str, p: str, o: Value, qualifiers) -> tuple:
    """Identity of a fact; qualifier order does not matter."""
    quals = frozenset(Counter((q, v.key()) for q, v in qualifiers).items())
    return (s, p, o.key(), quals)


@dataclass(frozen=True)
class SpoPattern:
    """Fixed positions of a lookup; ``None`` is a wildcard."""

    s: str | None = None
    p: str | None = None
    o: Value | None = None
    qualifiers: tuple[tuple[str, Value], ...] = ()


@dataclass
class DuplicateNameEntry:
    surface_name: str
    candidates: list[str]
    default: int = 0

    @property
    def default_id(self) -> str:
        return self.candidates[self.default]


@dataclass
class Resolution:
    kind: str  # "exact" | "alias" | "ambiguous" | "not_found"
    entity_id: str | None = None
    report: DuplicateNameEntry | None = None
    suggestions: list[FuzzySuggestion] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.entity_id is not None


@dataclass
class KnowledgeCard:
    entity: str
    facts: list[Statement]
    referenced_by: list[Statement]


def _compact(text: str) -> str:
    return "".join(text.casefold().split())


class Store:
    """Entity table, alias index, duplicate-name registry and statement indexes.

    Reads may run concurrently; mutators take ``self.lock``.
    """

    def __init__(self):
        self.lock = threading.RLock()
        self.entities: dict[str, Entity] = {}
        self.statements: dict[int, Statement] = {}
        self.rules: dict = {}  # rule id -> eql.rewrite.Rule
        self._next_statement = 1
        self._auto_next = 1
        self._names: dict[str, list[str]] = defaultdict(list)
        self._aliases: dict[str, str] = {}
        self._compact: dict[str, str] = {}
        self._defaults: dict[str, tuple[str, str]] = {}
        self._display: dict[str, str] = {}
        self._by_s: dict[str, set[int]] = defaultdict(set)
        self._by_p: dict[str, set[int]] = defaultdict(set)
        self._by_o: dict[tuple, set[int]] = defaultdict(set)
        self._by_q: dict[tuple, set[int]] = defaultdict(set)
        self._by_ref: dict[str, set[int]] = defaultdict(set)
        self._by_key: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.statements)

    # -- entities -------------------------------------------------------

    def add_entity(self, entity_id: str, name: str, kind: str = ENTITY_KIND) -> Entity:
        if not entity_id or _BAD_ID.search(entity_id):
            raise EQLError(f"invalid entity id {entity_id!r}")
        if kind == PROPERTY_KIND and not entity_id.startswith("p"):
            raise EQLError(f"property id {entity_id!r} must start with 'p'")
        if kind == ENTITY_KIND and not entity_id.startswith("e"):
            raise EQLError(f"entity id {entity_id!r} must start with 'e'")
        name = " ".join(name.split())
        with self.lock:
            existing = self.entities.get(entity_id)
            if existing is not None:
                if existing.canonical_name != name or existing.kind != kind:
                    raise EQLError(f"entity id {entity_id!r} already declared")
                return existing
            ent = Entity(entity_id, name, [], kind)
            self.entities[entity_id] = ent
            self._names[name.casefold()].append(entity_id)
            self._compact.setdefault(_compact(name), entity_id)
            return ent

    def new_entity(self, name: str, kind: str = ENTITY_KIND) -> Entity:
        """Create an entity with a generated id."""
        prefix = "p" if kind == PROPERTY_KIND else "e"
        with self.lock:
            while True:
                candidate = f"{prefix}x{self._auto_next:06d}"
                self._auto_next += 1
                if candidate not in self.entities:
                    return self.add_entity(candidate, name, kind)

    def add_alias(self, entity_id: str, alias: str) -> bool:
        """Register ``alias`` for an entity. Returns False if it was already known."""
        self._require(entity_id)
        alias = " ".join(alias.split())
        key = alias.casefold()
        with self.lock:
            if key in self._aliases:
                return False
            ent = self.entities[entity_id]
            if key == ent.canonical_name.casefold():
                return False
            self._aliases[key] = entity_id
            ent.aliases.append(alias)
            self._compact.setdefault(_compact(alias), entity_id)
            return True

    def set_default(self, surface: str, entity_id: str) -> None:
        """Declare ``entity_id`` the default referent of an ambiguous surface name."""
        self._require(entity_id)
        surface = " ".join(surface.split())
        with self.lock:
            self._defaults[surface.casefold()] = (surface, entity_id)
            self._display[entity_id] = surface

    def duplicate_entry(self, surface: str) -> DuplicateNameEntry | None:
        key = " ".join(surface.split()).casefold()
        if key in self._defaults:
            shown, default_id = self._defaults[key]
        else:
            ids = self._names.get(key, [])
            if len(ids) < 2:
                return None
            shown, default_id = surface, ids[0]
        prefix = key + "_"
        candidates = [e.id for e in self.entities.values()
                      if e.canonical_name.casefold() == key
                      or e.canonical_name.casefold().startswith(prefix)]
        if default_id not in candidates:
            candidates.insert(0, default_id)
        return DuplicateNameEntry(shown, candidates, candidates.index(default_id))

    def get(self, entity_id: str) -> Entity:
        return self._require(entity_id)

    def _require(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}") from None

    def display_name(self, entity_id: str) -> str:
        """Name shown in results: the surface name for registry defaults."""
        if entity_id in self._display:
            return self._display[entity_id]
        ent = self.entities.get(entity_id)
        return entity_id if ent is None else ent.canonical_name

    def find(self, surface: str) -> str | None:
        """Resolve without building suggestions."""
        return self.resolve_name(surface, fuzzy=False).entity_id

    def resolve_name(self, surface: str, fuzzy: bool = True) -> Resolution:
        surface = " ".join(surface.split())
        key = surface.casefold()
        entry = self.duplicate_entry(surface)
        if entry is not None:
            return Resolution("ambiguous", entry.default_id, entry)
        ids = self._names.get(key)
        if ids:
            return Resolution("exact", ids[0])
        if key in self._aliases:
            return Resolution("alias", self._aliases[key])
        compact = _compact(surface)
        if compact in self._compact:
            return Resolution("alias", self._compact[compact])
        if surface in self.entities:
            return Resolution("exact", surface)
        suggestions = suggest_similar(surface, self.name_pool()) if fuzzy else []
        return Resolution("not_found", suggestions=suggestions)

    def name_pool(self) -> Iterator[tuple[str, str, str]]:
        """(name, entity id, canonical name) for every canonical name and alias."""
        for ent in self.entities.values():
            yield ent.canonical_name, ent.id, ent.canonical_name
            for alias in ent.aliases:
                yield alias, ent.id, ent.canonical_name

    def lexicon(self) -> set[str]:
        """Every name, alias and text value, case-folded; used for segmentation."""
        words = {name.casefold() for name, _, _ in self.name_pool()}
        words.update(surface.casefold() for surface, _ in self._defaults.values())
        for st in self.statements.values():
            if st.o.tag == "text":
                words.add(st.o.payload.casefold())
        return words

    # -- statements -----------------------------------------------------

    def _check_value(self, value: Value) -> None:
        if value.is_entity:
            self._require(value.payload)

    def add_statement(self, s: str, p: str, o: Value, qualifiers: Iterable = ()) -> int:
        """Insert a fact and return its id; an identical fact returns the existing id."""
        qualifiers = tuple((q, v) for q, v in qualifiers)
        self._require(s)
        if self._require(p).kind != PROPERTY_KIND:
            raise PropertyKindError(f"{p!r} is not a property")
        self._check_value(o)
        for q, v in qualifiers:
            if self._require(q).kind != PROPERTY_KIND:
                raise PropertyKindError(f"qualifier {q!r} is not a property")
            self._check_value(v)
        key = statement_key(s, p, o, qualifiers)
        with self.lock:
            existing = self._by_key.get(key)
            if existing is not None:
                return existing
            sid = self._next_statement
            self._next_statement += 1
            st = Statement(sid, s, p, o, qualifiers)
            self.statements[sid] = st
            self._by_key[key] = sid
            self._index(st, add=True)
            return sid

    def remove_statement(self, sid: int) -> Statement:
        with self.lock:
            st = self.statements.pop(sid)
            del self._by_key[st.key()]
            self._index(st, add=False)
            return st

    def _index(self, st: Statement, add: bool) -> None:
        buckets = [self._by_s[st.s], self._by_p[st.p]]
        buckets += [self._by_o[k] for k in st.o.match_keys()]
        for q, v in st.qualifiers:
            buckets += [self._by_q[(q, k)] for k in v.match_keys()]
            if v.is_entity:
                buckets.append(self._by_ref[v.payload])
        if st.o.is_entity:
            buckets.append(self._by_ref[st.o.payload])
        for bucket in buckets:
            if add:
                bucket.add(st.id)
            else:
                bucket.discard(st.id)

    def find_statement(self, s: str, p: str, o: Value, qualifiers=()) -> Statement | None:
        sid = self._by_key.get(statement_key(s, p, o, qualifiers))
        return None if sid is None else self.statements[sid]

    def lookup(self, pattern: SpoPattern) -> list[Statement]:
        """Statements matching every fixed position, in statement-id order."""
        sets = []
        if pattern.s is not None:
            sets.append(self._by_s.get(pattern.s, set()))
        if pattern.p is not None:
            sets.append(self._by_p.get(pattern.p, set()))
        if pattern.o is not None:
            sets.append(self._by_o.get(pattern.o.key(), set()))
        for q, v in pattern.qualifiers:
            sets.append(self._by_q.get((q, v.key()), set()))
        if not sets:
            return [self.statements[i] for i in sorted(self.statements)]
        sets.sort(key=len)
        first, rest = sets[0], sets[1:]
        ids = [i for i in first if all(i in other for other in rest)]
        return [self.statements[i] for i in sorted(ids)]

    def knowledge_card(self, entity_id: str) -> KnowledgeCard:
        self._require(entity_id)
        facts = self.lookup(SpoPattern(s=entity_id))
        refs = [self.statements[i] for i in sorted(self._by_ref.get(entity_id, ()))]
        return KnowledgeCard(entity_id, facts, refs)

    def statement_multiset(self) -> Counter:
        return Counter(st.key() for st in self.statements.values())

    def copy(self) -> Store:
        with self.lock:
            lock, self.lock = self.lock, None
            try:
                dup = copy.deepcopy(self)
            finally:
                self.lock = lock
        dup.lock = threading.RLock()
        return dup

    # -- persistence ----------------------------------------------------

    def load_graph(self, source, origin: str = "<kgt>"):
        from eql.kgt import load_graph

        return load_graph(self, source, origin=origin)

    def save_graph(self) -> str:
        from eql.kgt import save_graph

        return save_graph(self)
