"""The ``\\suggest`` protocol: queued add/change/delete proposals and review.

Nothing touches the store until a reviewer approves. The queue can be
backed by an append-only journal::

    @submit 1 2026-10-16T09:30:00+00:00 \\suggest add s : p : o (q : v) \\ref1: source
    @review 1 approved checked against the cited edition

Replaying a journal onto the graph it started from reproduces the graph.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from eql.ast import Fact, Suggestion
from eql.errors import EQLError, EQLSyntaxError, RevisionError
from eql.parser import format_suggestion, parse_suggestion
from eql.store import ENTITY_KIND, PROPERTY_KIND, Statement, Store

PENDING = "pending"
APPROVED = "approved"
REJECTED = "rejected"
STATES = (PENDING, APPROVED, REJECTED)


@dataclass
class SuggestionRecord:
    id: int
    suggestion: Suggestion
    submitted_at: str
    state: str = PENDING
    note: str = ""
    duplicate: bool = False

    @property
    def kind(self) -> str:
        return self.suggestion.kind

    @property
    def refs(self) -> tuple[str, ...]:
        return self.suggestion.refs


@dataclass
class ReviewOutcome:
    id: int
    state: str
    message: str
    error: str | None = None
    changed: list[int] = field(default_factory=list)  # statement ids added or removed


def acknowledgement(kind: str) -> str:
    return f"'\\suggest {kind}' request accepted"


def _approved_message(kind: str) -> str:
    return f"'\\suggest {kind}' request has been approved and the knowledge graph has been successfully updated"


def _rejected_message(kind: str) -> str:
    return f"'\\suggest {kind}' request has been rejected"


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


# -- resolving facts against the store -----------------------------------------


def _resolve_fact(store: Store, fact: Fact, create: bool):
    """(s, p, o, qualifiers) ids and values for ``fact``; None if a name is unknown."""
    from eql.kgt import value_from_text

    def ident(name: str, kind: str):
        ent = store.find(name)
        if ent is None and create:
            ent = store.new_entity(name, kind).id
        return ent

    s = ident(fact.s, ENTITY_KIND)
    p = ident(fact.p, PROPERTY_KIND)
    if s is None or p is None:
        return None
    quals = []
    for qname, vtext in fact.qualifiers:
        q = ident(qname, PROPERTY_KIND)
        if q is None:
            return None
        quals.append((q, value_from_text(store, vtext, qname)))
    return s, p, value_from_text(store, fact.o, fact.p), tuple(quals)


def _find_exact(store: Store, fact: Fact) -> Statement | None:
    resolved = _resolve_fact(store, fact, create=False)
    return None if resolved is None else store.find_statement(*resolved)


def _is_derived(store: Store, st: Statement) -> bool:
    from eql.rewrite import DERIVED_BY

    tag = store.find(DERIVED_BY)
    return tag is not None and any(q == tag for q, _ in st.qualifiers)


def _delete_target(store: Store, fact: Fact) -> Statement | None:
    """Of the statements matching s : p : o, the one with fewest qualifiers, then lowest id."""
    from eql.kgt import value_from_text
    from eql.store import SpoPattern

    s, p = store.find(fact.s), store.find(fact.p)
    if s is None or p is None:
        return None
    o = value_from_text(store, fact.o, fact.p)
    matches = [st for st in store.lookup(SpoPattern(s, p, o)) if not _is_derived(store, st)]
    if not matches:
        return None
    return min(matches, key=lambda st: (len(st.qualifiers), st.id))


# -- the queue ------------------------------------------------------------------


class SuggestionQueue:
    """Pending revision requests against one store."""

    def __init__(self, store: Store, journal_path: str | os.PathLike | None = None,
                 clock: Callable[[], str] = _now):
        self.store = store
        self.journal_path = journal_path
        self.clock = clock
        self.records: dict[int, SuggestionRecord] = {}
        self._next = 1
        self._lines: list[str] = []

    # journal ----------------------------------------------------------------

    def _log(self, line: str) -> None:
        self._lines.append(line)
        if self.journal_path is not None:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def journal(self) -> str:
        return "".join(line + "\n" for line in self._lines)

    @classmethod
    def open(cls, store: Store, journal_path, clock: Callable[[], str] = _now) -> SuggestionQueue:
        """Queue backed by ``journal_path``; existing entries are replayed onto ``store``."""
        text = ""
        if os.path.exists(journal_path):
            with open(journal_path, encoding="utf-8") as fh:
                text = fh.read()
        queue = cls.replay(store, text, clock=clock)
        queue.journal_path = journal_path
        return queue

    @classmethod
    def replay(cls, store: Store, journal: str, clock: Callable[[], str] = _now) -> SuggestionQueue:
        """Re-run every submission and review in ``journal`` against ``store``."""
        queue = cls(store, None, clock)
        for lineno, line in enumerate(journal.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 3)
            if len(parts) < 3 or parts[0] not in ("@submit", "@review") or not parts[1].isdigit():
                raise RevisionError(f"journal line {lineno}: cannot read {line!r}")
            sid = int(parts[1])
            if parts[0] == "@submit":
                if len(parts) < 4:
                    raise RevisionError(f"journal line {lineno}: submission without text")
                queue._next = sid
                queue.submit(parts[3], submitted_at=parts[2])
            else:
                verdict = {"approved": "approve", "rejected": "reject"}.get(parts[2])
                if verdict is None:
                    raise RevisionError(f"journal line {lineno}: unknown state {parts[2]!r}")
                queue._replay_review(sid, verdict, parts[3] if len(parts) > 3 else "")
        return queue

    def _replay_review(self, sid: int, verdict: str, note: str) -> None:
        rec = self.records.get(sid)
        if rec is None:
            raise RevisionError(f"journal reviews unknown suggestion {sid}")
        if rec.state != PENDING:
            return  # an automatic rejection already recorded by the replayed approval
        self.review(sid, verdict, note)

    # operations -------------------------------------------------------------

    def submit(self, suggestion: Suggestion | str, submitted_at: str | None = None) -> tuple[int, str]:
        """Queue a suggestion. Returns its id and the acknowledgement text."""
        if isinstance(suggestion, str):
            try:
                suggestion = parse_suggestion(suggestion)
            except EQLSyntaxError as exc:
                raise RevisionError(f"malformed suggestion: {exc}") from None
        if suggestion.kind not in ("add", "change", "delete"):
            raise RevisionError(f"unknown suggestion kind {suggestion.kind!r}")
        if suggestion.kind == "change" and suggestion.after is None:
            raise RevisionError("'\\suggest change' needs the statement after \\changeTo")
        if suggestion.kind == "delete" and suggestion.before.qualifiers:
            raise RevisionError("'\\suggest delete' takes s : p : o only, without qualifiers")
        duplicate = False
        if suggestion.kind == "add":
            duplicate = _find_exact(self.store, suggestion.before) is not None
        sid = self._next
        self._next += 1
        stamp = submitted_at or self.clock()
        self.records[sid] = SuggestionRecord(sid, suggestion, stamp, duplicate=duplicate)
        self._log(f"@submit {sid} {stamp} {format_suggestion(suggestion)}")
        return sid, acknowledgement(suggestion.kind)

    def get(self, sid: int) -> SuggestionRecord:
        try:
            return self.records[sid]
        except KeyError:
            raise RevisionError(f"no suggestion with id {sid}") from None

    def list_queue(self, state: str | None = None) -> list[SuggestionRecord]:
        if state is not None and state not in STATES:
            raise RevisionError(f"unknown state {state!r}")
        return [r for r in self.records.values() if state is None or r.state == state]

    def review(self, sid: int, verdict: str, note: str = "") -> ReviewOutcome:
        """Approve (and apply) or reject a pending suggestion."""
        rec = self.get(sid)
        if rec.state != PENDING:
            raise RevisionError(f"suggestion {sid} is already {rec.state}")
        if verdict not in ("approve", "reject"):
            raise RevisionError(f"verdict must be approve or reject, not {verdict!r}")
        kind = rec.kind
        note = " ".join(note.split())
        if verdict == "reject":
            return self._close(rec, REJECTED, note, _rejected_message(kind))
        with self.store.lock:
            try:
                changed = self._apply(rec.suggestion)
            except RevisionError as exc:
                reason = str(exc)
                return self._close(rec, REJECTED, reason, _rejected_message(kind), error=reason)
        return self._close(rec, APPROVED, note, _approved_message(kind), changed=changed)

    def _close(self, rec, state, note, message, error=None, changed=()) -> ReviewOutcome:
        rec.state = state
        rec.note = note
        self._log(f"@review {rec.id} {state} {note}".rstrip())
        return ReviewOutcome(rec.id, state, message, error, list(changed))

    def _apply(self, sug: Suggestion) -> list[int]:
        store = self.store
        if sug.kind == "add":
            s, p, o, quals = _resolve_fact(store, sug.before, create=True)
            return [store.add_statement(s, p, o, quals)]
        if sug.kind == "delete":
            target = _delete_target(store, sug.before)
            if target is None:
                return []
            store.remove_statement(target.id)
            return [target.id]
        before = _find_exact(store, sug.before)
        if before is None:
            raise RevisionError("before-statement not found")
        if _is_derived(store, before):
            raise RevisionError("derived statements cannot be changed")
        store.remove_statement(before.id)
        try:
            s, p, o, quals = _resolve_fact(store, sug.after, create=True)
            new_id = store.add_statement(s, p, o, quals)
        except EQLError as exc:
            store.add_statement(before.s, before.p, before.o, before.qualifiers)
            raise RevisionError(f"after-statement rejected: {exc}") from None
        return [before.id, new_id]
