"""Whole-string templates: ``%`` spans any run of characters, ``_`` exactly one.

A backslash makes the next character literal, so ``\\%`` and ``\\_`` match
the characters themselves.
"""

from __future__ import annotations

from functools import lru_cache

from eql.kernels import ANY, LIT, ONE, match_atoms


@lru_cache(maxsize=1024)
def compile_template(template: str) -> tuple[bytes, str]:
    """Encode ``template`` as parallel (kinds, literal chars) sequences."""
    kinds = bytearray()
    lits = []
    i = 0
    while i < len(template):
        ch = template[i]
        if ch == "\\" and i + 1 < len(template):
            kinds.append(LIT)
            lits.append(template[i + 1])
            i += 2
            continue
        if ch == "%":
            if not kinds or kinds[-1] != ANY:  # runs of % are one wildcard
                kinds.append(ANY)
                lits.append("%")
        elif ch == "_":
            kinds.append(ONE)
            lits.append("_")
        else:
            kinds.append(LIT)
            lits.append(ch)
        i += 1
    return bytes(kinds), "".join(lits)


def match_template(template: str, candidate: str) -> bool:
    kinds, lits = compile_template(template)
    return match_atoms(kinds, lits, candidate)
