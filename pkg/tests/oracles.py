"""Independent reference implementations used by the tests."""

import itertools
import re


def template_regex(template: str) -> re.Pattern:
    """Anchored regex for a match template: % any run, _ one char, backslash escapes."""
    out = []
    i = 0
    while i < len(template):
        ch = template[i]
        if ch == "\\" and i + 1 < len(template):
            out.append(re.escape(template[i + 1]))
            i += 2
            continue
        out.append(".*" if ch == "%" else "." if ch == "_" else re.escape(ch))
        i += 1
    return re.compile("".join(out), re.DOTALL)


def template_oracle(template: str, candidate: str) -> bool:
    return template_regex(template).fullmatch(candidate) is not None


def brute_force(facts, patterns, variables, domain):
    """Every assignment of ``domain`` constants to ``variables`` satisfying all patterns.

    ``facts`` is a set of (s, p, o, frozenset of (q, v)); a pattern is
    (s, p, o, (q, v) or None) whose items are constants or ("var", name).
    Returns the set of satisfying tuples in ``variables`` order.
    """
    triples = {(s, p, o) for s, p, o, _ in facts}
    quads = {(s, p, o, qv) for s, p, o, quals in facts for qv in quals}
    out = set()
    for combo in itertools.product(domain, repeat=len(variables)):
        env = dict(zip(variables, combo))

        def val(t):
            return env[t[1]] if isinstance(t, tuple) and t[:1] == ("var",) else t

        ok = True
        for s, p, o, qual in patterns:
            spo = (val(s), val(p), val(o))
            if qual is None:
                ok = spo in triples
            else:
                ok = (*spo, (val(qual[0]), val(qual[1]))) in quads
            if not ok:
                break
        if ok:
            out.add(combo)
    return out


def sort_oracle(items, descending=False):
    """Insertion sort: the reference ordering for stable sorts by key."""
    out = []
    for item in items:
        i = len(out)
        while i > 0 and ((out[i - 1][0] < item[0]) if descending else (out[i - 1][0] > item[0])):
            i -= 1
        out.insert(i, item)
    return out
