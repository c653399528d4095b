"""Pure-Python versions of the hot loops. Mirrors ``_ckernels.pyx`` exactly."""

LIT = 0
ONE = 1
ANY = 2


def match_atoms(kinds: bytes, lits: str, candidate: str) -> bool:
    """Whole-string wildcard match of an encoded template against ``candidate``.

    ``kinds[i]`` is LIT, ONE or ANY; ``lits[i]`` holds the literal character
    for LIT atoms and is ignored otherwise.
    """
    m = len(kinds)
    n = len(candidate)
    ti = ci = 0
    star = -1
    mark = 0
    while ci < n:
        if ti < m and (kinds[ti] == ONE or (kinds[ti] == LIT and lits[ti] == candidate[ci])):
            ti += 1
            ci += 1
        elif ti < m and kinds[ti] == ANY:
            star = ti
            mark = ci
            ti += 1
        elif star >= 0:
            ti = star + 1
            mark += 1
            ci = mark
        else:
            return False
    while ti < m and kinds[ti] == ANY:
        ti += 1
    return ti == m


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]
