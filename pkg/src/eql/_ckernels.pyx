# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot loops. Must agree with ``_pykernels``."""

from libc.stdlib cimport malloc, free

cdef enum:
    LIT = 0
    ONE = 1
    ANY = 2


def match_atoms(bytes kinds, str lits, str candidate):
    cdef const unsigned char[:] k = kinds
    cdef Py_ssize_t m = len(kinds)
    cdef Py_ssize_t n = len(candidate)
    cdef Py_ssize_t ti = 0, ci = 0, star = -1, mark = 0
    cdef Py_UCS4 c
    while ci < n:
        c = candidate[ci]
        if ti < m and (k[ti] == ONE or (k[ti] == LIT and <Py_UCS4>lits[ti] == c)):
            ti += 1
            ci += 1
        elif ti < m and k[ti] == ANY:
            star = ti
            mark = ci
            ti += 1
        elif star >= 0:
            ti = star + 1
            mark += 1
            ci = mark
        else:
            return False
    while ti < m and k[ti] == ANY:
        ti += 1
    return ti == m


def edit_distance(str a, str b):
    if len(a) < len(b):
        a, b = b, a
    cdef Py_ssize_t la = len(a), lb = len(b)
    if lb == 0:
        return la
    cdef Py_ssize_t *prev = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *cur = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *tmp
    cdef Py_ssize_t i, j, best, cost
    cdef Py_UCS4 ca
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(lb + 1):
            prev[j] = j
        for i in range(1, la + 1):
            ca = a[i - 1]
            cur[0] = i
            for j in range(1, lb + 1):
                cost = 0 if ca == <Py_UCS4>b[j - 1] else 1
                best = prev[j] + 1
                if cur[j - 1] + 1 < best:
                    best = cur[j - 1] + 1
                if prev[j - 1] + cost < best:
                    best = prev[j - 1] + cost
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[lb]
    finally:
        free(prev)
        free(cur)
