"""Text, CSV and JSON-lines output for result sets and knowledge cards."""

from __future__ import annotations

import csv
import io
import json

from eql.evaluator import BindingRow, ResultSet
from eql.store import DuplicateNameEntry, KnowledgeCard, Store
from eql.values import QUALIFIERS, Value

MODES = ("table", "csv", "jsonl")
_BARE_LABELS = ("?", "(?)")


def value_parts(store: Store, value: Value) -> tuple[str, str]:
    """(display text, entity id or "")."""
    if value.is_entity:
        return store.display_name(value.payload), value.payload
    if value.tag == QUALIFIERS:
        inner = ", ".join(f"{store.display_name(q)}: {value_text(store, v)}" for q, v in value.payload)
        return f"({inner})", ""
    return str(value), ""


def value_text(store: Store, value: Value) -> str:
    text, ident = value_parts(store, value)
    return f"{text} {ident}" if ident else text


def duplicate_report(store: Store, entries: list[DuplicateNameEntry]) -> str:
    if not entries:
        return ""
    lines = ["EQL duplicate name report:"]
    for entry in entries:
        lines.append("")
        for i, cand in enumerate(entry.candidates, 1):
            mark = " default" if i - 1 == entry.default else ""
            lines.append(f"{i}. {store.get(cand).canonical_name}{mark}")
        default = store.get(entry.default_id).canonical_name
        lines.append(f'default applied: "{entry.surface_name} = {default}"')
    return "\n".join(lines) + "\n"


class Renderer:
    """Lays out one result set; rows render the same on every page."""

    def __init__(self, store: Store, result: ResultSet, mode: str = "table"):
        if mode not in MODES:
            raise ValueError(f"unknown output mode {mode!r}")
        self.store = store
        self.result = result
        self.mode = mode
        agg = set(result.aggregates)
        self.columns = [c for c in result.columns if c.key not in agg] if agg else list(result.columns)
        self.entries = self._entries()
        self._widths = self._measure()

    def _entries(self) -> list[tuple[str | None, BindingRow]]:
        """(group label, row) pairs after hiding aggregate columns."""
        rs = self.result
        if rs.groups is not None:
            pairs = [(g.label, r) for g in rs.groups for r in g.rows]
        else:
            pairs = [(None, r) for r in rs.rows]
        if not rs.aggregates:
            return pairs
        seen, out = set(), []
        for label, row in pairs:
            ident = (label, tuple(row[c.key].key() if c.key in row else None for c in self.columns))
            if ident not in seen and any(c.key in row for c in self.columns):
                seen.add(ident)
                out.append((label, row))
        return out

    def _measure(self) -> dict[str, tuple[int, int]]:
        widths = {}
        for col in self.columns:
            w_text = w_id = 0
            for _, row in self.entries:
                if col.key in row:
                    text, ident = value_parts(self.store, row[col.key])
                    w_text, w_id = max(w_text, len(text)), max(w_id, len(ident))
            widths[col.key] = (w_text, w_id)
        return widths

    def __len__(self) -> int:
        return len(self.entries)

    # -- table ----------------------------------------------------------

    def _cell(self, col, row: BindingRow, last: bool) -> str:
        w_text, w_id = self._widths[col.key]
        text, ident = value_parts(self.store, row[col.key]) if col.key in row else ("", "")
        body = text.ljust(w_text)
        if w_id:
            body += " " + ident.ljust(w_id)
        body = body.rstrip() if last else body
        if len(self.columns) == 1 and col.label in _BARE_LABELS:
            return body
        return f"{col.label} = {body}"

    def table_row(self, row: BindingRow) -> str:
        n = len(self.columns)
        return "  ".join(self._cell(c, row, i == n - 1) for i, c in enumerate(self.columns)).rstrip()

    def _summary(self) -> list[str]:
        rs = self.result
        lines = []
        for var, value in rs.aggregates.items():
            line = f"{var} = {value_text(self.store, value)}"
            rows = rs.extremes.get(var)
            if rows:
                notes = []
                for row in rows:
                    parts = [f"{k} = {value_text(self.store, v)}" for k, v in row.values.items()
                             if v.is_entity and not k.startswith("_")]
                    if parts:
                        notes.append(", ".join(parts))
                if notes:
                    line += " (" + "; ".join(dict.fromkeys(notes)) + ")"
            lines.append(line)
        return lines

    def _table(self, entries, first: bool, final: bool) -> str:
        lines = []
        previous = object() if first else (entries[0][0] if entries else None)
        if first and not entries and not self.result.aggregates:
            lines.append("(no results)")
        for label, row in entries:
            if label != previous and label is not None:
                lines.append(f"group {self.result.group_label} = {label}")
            previous = label
            if self.columns:
                lines.append(self.table_row(row))
        if final:
            lines.extend(self._summary())
        return "".join(line + "\n" for line in lines)

    # -- csv / jsonl ----------------------------------------------------

    def _flat(self, label, row) -> dict[str, str]:
        rec = {}
        if self.result.groups is not None:
            rec["group"] = label
        for col in self.columns:
            text, ident = value_parts(self.store, row[col.key]) if col.key in row else ("", "")
            rec[col.label] = text
            rec[f"{col.label} id"] = ident
        return rec

    def _header(self) -> list[str]:
        head = ["group"] if self.result.groups is not None else []
        for col in self.columns:
            head += [col.label, f"{col.label} id"]
        return head

    def _csv(self, entries, first: bool) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=self._header(), lineterminator="\n")
        if first:
            writer.writeheader()
        for label, row in entries:
            writer.writerow(self._flat(label, row))
        return out.getvalue()

    def _jsonl(self, entries) -> str:
        return "".join(json.dumps(self._flat(label, row), ensure_ascii=False) + "\n"
                       for label, row in entries)

    # -- public ---------------------------------------------------------

    def render_slice(self, start: int, stop: int | None) -> str:
        entries = self.entries[start:stop]
        first = start == 0
        final = stop is None or stop >= len(self.entries)
        if self.mode == "csv":
            return self._csv(entries, first)
        if self.mode == "jsonl":
            return self._jsonl(entries)
        if not first and entries and entries[0][0] is not None:
            # repeat the group header at the top of a continuation page
            prev = self.entries[start - 1][0]
            if prev == entries[0][0]:
                head = f"group {self.result.group_label} = {entries[0][0]} (continued)\n"
                return head + self._table(entries, False, final)
        return self._table(entries, first, final)

    def page(self, index: int, page_size: int | None = None) -> tuple[str, bool]:
        """Text for page ``index`` and whether more rows follow."""
        size = page_size or self.result.page_size
        start = index * size
        stop = start + size
        return self.render_slice(start, stop), stop < len(self.entries)

    def full(self) -> str:
        return self.render_slice(0, None)

    def footer(self) -> str:
        if self.mode != "table":
            return ""
        return duplicate_report(self.store, self.result.reports)


def render_result(store: Store, result: ResultSet, mode: str = "table") -> str:
    r = Renderer(store, result, mode)
    return r.full() + r.footer()


# -- knowledge cards ------------------------------------------------------


def card_text(store: Store, card: KnowledgeCard) -> str:
    lines = [f"{store.display_name(card.entity)}  {card.entity}"]
    for st in card.facts:
        line = f"  {store.display_name(st.p)} : {value_text(store, st.o)}"
        if st.qualifiers:
            quals = ", ".join(f"{store.display_name(q)}: {value_text(store, v)}" for q, v in st.qualifiers)
            line += f" ({quals})"
        lines.append(line)
    if card.referenced_by:
        lines.append("  referenced by:")
        for st in card.referenced_by:
            lines.append(f"    {store.display_name(st.s)} : {store.display_name(st.p)}")
    return "\n".join(lines) + "\n"


def card_csv(store: Store, card: KnowledgeCard) -> str:
    """One row per fact; each qualifier property gets its own column."""
    qual_cols: dict[str, None] = {}
    for st in card.facts:
        for q, _ in st.qualifiers:
            qual_cols.setdefault(store.display_name(q))
    head = ["subject", "subject id", "property", "value", "value id", *qual_cols]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(head)
    for st in card.facts:
        text, ident = value_parts(store, st.o)
        quals: dict[str, list[str]] = {}
        for q, v in st.qualifiers:
            quals.setdefault(store.display_name(q), []).append(value_text(store, v))
        writer.writerow([store.display_name(st.s), st.s, store.display_name(st.p), text, ident,
                         *("; ".join(quals.get(c, [])) for c in qual_cols)])
    return out.getvalue()
