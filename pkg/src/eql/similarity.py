"""Edit-distance suggestions for names that failed to resolve."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from eql.kernels import edit_distance

MAX_DISTANCE = 0.4


@dataclass(frozen=True)
class FuzzySuggestion:
    text: str  # the matching name or alias, as stored
    entity_id: str
    canonical_name: str
    distance: float

    @property
    def label(self) -> str:
        if self.text == self.canonical_name:
            return self.text
        return f"{self.text} ({self.canonical_name})"


def normalized_distance(a: str, b: str) -> float:
    a = a.casefold()
    b = b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


def suggest_similar(surface: str, pool: Iterable[tuple[str, str, str]],
                    limit: int | None = 5) -> list[FuzzySuggestion]:
    """Rank ``pool`` entries ``(name, entity_id, canonical_name)`` by distance.

    Keeps entries with normalized edit distance <= 0.4, nearest first, then
    lexically by name. One suggestion per entity.
    """
    scored = []
    for name, entity_id, canonical in pool:
        d = normalized_distance(surface, name)
        if d <= MAX_DISTANCE:
            scored.append(FuzzySuggestion(name, entity_id, canonical, d))
    scored.sort(key=lambda s: (s.distance, s.text))
    seen = set()
    out = []
    for s in scored:
        if s.entity_id in seen:
            continue
        seen.add(s.entity_id)
        out.append(s)
    return out if limit is None else out[:limit]
