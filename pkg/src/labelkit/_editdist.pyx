# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Levenshtein kernel.

Mirrors labelkit._editdist_py exactly; selected at import time when built.
"""

from libc.stdlib cimport free, malloc

BACKEND = "cython"


cdef inline Py_ssize_t _common_prefix(str a, str b, Py_ssize_t la, Py_ssize_t lb):
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t n = la if la < lb else lb
    while i < n and a[i] == b[i]:
        i += 1
    return i


cdef int _dp(str a, str b, Py_ssize_t la, Py_ssize_t lb, long cap) except -1:
    # Two-row DP over trimmed strings; cap < 0 means uncapped.
    cdef Py_ssize_t i, j
    cdef long v, best, up, left, diag
    cdef Py_UCS4 ca, cb
    cdef long *prev = <long *> malloc((la + 1) * sizeof(long))
    if prev == NULL:
        raise MemoryError()
    try:
        for i in range(la + 1):
            prev[i] = i
        for j in range(1, lb + 1):
            cb = b[j - 1]
            diag = prev[0]
            prev[0] = j
            left = j
            best = j
            for i in range(1, la + 1):
                ca = a[i - 1]
                up = prev[i]
                v = diag if ca == cb else diag + 1
                if up + 1 < v:
                    v = up + 1
                if left + 1 < v:
                    v = left + 1
                diag = up
                prev[i] = v
                left = v
                if v < best:
                    best = v
            if cap >= 0 and best > cap:
                return cap + 1
        v = prev[la]
        if cap >= 0 and v > cap:
            return cap + 1
        return v
    finally:
        free(prev)


def distance(str a, str b):
    """Levenshtein distance over Unicode code points, unit costs."""
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    cdef Py_ssize_t lo = _common_prefix(a, b, la, lb)
    while la > lo and lb > lo and a[la - 1] == b[lb - 1]:
        la -= 1
        lb -= 1
    a = a[lo:la]
    b = b[lo:lb]
    la -= lo
    lb -= lo
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la > lb:
        a, b = b, a
        la, lb = lb, la
    return _dp(a, b, la, lb, -1)


def distance_capped(str a, str b, long cap):
    """Levenshtein distance, or ``cap + 1`` as soon as it provably exceeds ``cap``."""
    if cap < 0:
        return 0 if a == b else cap + 1
    if a == b:
        return 0
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    cdef Py_ssize_t lo = _common_prefix(a, b, la, lb)
    while la > lo and lb > lo and a[la - 1] == b[lb - 1]:
        la -= 1
        lb -= 1
    a = a[lo:la]
    b = b[lo:lb]
    la -= lo
    lb -= lo
    if abs(la - lb) > cap:
        return cap + 1
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la > lb:
        a, b = b, a
        la, lb = lb, la
    return _dp(a, b, la, lb, cap)
