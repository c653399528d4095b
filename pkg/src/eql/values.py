"""Object and qualifier values: entities, text, quantities, dates, booleans."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

ENTITY = "entity"
TEXT = "text"
QUANTITY = "quantity"
DATE = "date"
BOOLEAN = "boolean"
QUALIFIERS = "qualifiers"  # a whole qualifier block, bound by ``(?)``

_NUMBER = r"[+-]?\d+(?:\.\d+)?"
_NUMBER_RE = re.compile(rf"^{_NUMBER}$")
# "8000000 SEK", "16410 sq km", "1.52 million square kilometers"
_NUMBER_UNIT_RE = re.compile(rf"^({_NUMBER})\s+([^\d\s][^\d]*)$")
# "SEK 8000000": unit-first only for short upper-case codes (currencies etc.)
_UNIT_NUMBER_RE = re.compile(rf"^([A-Z]{{2,4}})\s+({_NUMBER})$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})(?:-(\d{2}))?$")


@dataclass(frozen=True)
class Quantity:
    magnitude: Decimal
    unit: str = ""

    def __str__(self) -> str:
        text = format_decimal(self.magnitude)
        return f"{text} {self.unit}" if self.unit else text


@dataclass(frozen=True)
class Date:
    year: int
    month: int | None = None
    day: int | None = None

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.year, self.month or 0, self.day or 0)

    def __str__(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"


@dataclass(frozen=True)
class Value:
    """A tagged value. ``payload`` is an entity id, str, Quantity, Date or bool."""

    tag: str
    payload: object

    @classmethod
    def entity(cls, entity_id: str) -> Value:
        return cls(ENTITY, entity_id)

    @classmethod
    def text(cls, text: str) -> Value:
        return cls(TEXT, text)

    @classmethod
    def quantity(cls, magnitude, unit: str = "") -> Value:
        return cls(QUANTITY, Quantity(Decimal(magnitude), unit))

    @classmethod
    def date(cls, year: int, month: int | None = None, day: int | None = None) -> Value:
        return cls(DATE, Date(year, month, day))

    @classmethod
    def boolean(cls, flag: bool) -> Value:
        return cls(BOOLEAN, bool(flag))

    @property
    def is_entity(self) -> bool:
        return self.tag == ENTITY

    def key(self) -> tuple:
        """Hashable identity used for equality, dedup and index lookups.

        A year-only date and the bare integer with the same digits share a
        key: "1925" means the same thing under ``date`` or ``first published``.
        """
        p = self.payload
        if self.tag == QUANTITY:
            return ("q", p.magnitude.normalize(), p.unit)
        if self.tag == DATE:
            if p.month is None:
                return ("q", Decimal(p.year).normalize(), "")
            return ("d", p.year, p.month, p.day)
        if self.tag == QUALIFIERS:
            return ("Q", tuple((q, v.key()) for q, v in p))
        return (self.tag[0], p)

    def match_keys(self) -> list[tuple]:
        return [self.key()]

    def __str__(self) -> str:
        if self.tag == BOOLEAN:
            return "\\true" if self.payload else "\\false"
        if self.tag == QUALIFIERS:
            return "(" + ", ".join(f"{q}: {v}" for q, v in self.payload) + ")"
        return str(self.payload)


def format_decimal(d: Decimal) -> str:
    if d == d.to_integral_value():
        return format(d.quantize(Decimal(1)), "f")
    return format(d.normalize(), "f")


def is_date_key(key: str | None) -> bool:
    """Qualifier/property names whose bare 4-digit values are years."""
    if not key:
        return False
    words = key.casefold().split()
    return bool(words) and words[0] == "date"


def parse_value(text: str, key: str | None = None) -> Value:
    """Parse literal text into a non-entity value.

    ``key`` is the property or qualifier name the text is attached to; it
    decides whether a bare 4-digit integer is a year.
    """
    text = text.strip()
    if text in ("true", "false"):
        return Value.boolean(text == "true")
    m = _DATE_RE.match(text)
    if m:
        month = int(m.group(2))
        day = int(m.group(3)) if m.group(3) else None
        if 1 <= month <= 12 and (day is None or 1 <= day <= 31):
            return Value.date(int(m.group(1)), month, day)
    try:
        if _NUMBER_RE.match(text):
            number = Decimal(text)
            if is_date_key(key) and len(text) == 4 and text.isdigit():
                return Value.date(int(text))
            return Value(QUANTITY, Quantity(number, ""))
        m = _NUMBER_UNIT_RE.match(text)
        if m and any(ch.isalpha() for ch in m.group(2)):
            return Value(QUANTITY, Quantity(Decimal(m.group(1)), " ".join(m.group(2).split())))
        m = _UNIT_NUMBER_RE.match(text)
        if m:
            return Value(QUANTITY, Quantity(Decimal(m.group(2)), m.group(1)))
    except InvalidOperation:
        pass
    return Value.text(text)
