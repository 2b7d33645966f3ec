"""Pure-Python Levenshtein kernel.

Fallback used when the compiled extension (``labelkit._editdist``) is not
available. Same interface, same results, just slower on large pairwise scans.
"""

from __future__ import annotations

BACKEND = "python"


def _trim(a: str, b: str) -> tuple[str, str]:
    # A shared prefix/suffix never participates in an optimal edit script.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    return a[lo:hi_a], b[lo:hi_b]


def distance(a: str, b: str) -> int:
    """Levenshtein distance over Unicode code points, unit costs."""
    if a == b:
        return 0
    a, b = _trim(a, b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a

    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j]
        append = cur.append
        for i, ca in enumerate(a, start=1):
            append(
                min(
                    prev[i] + 1,
                    cur[i - 1] + 1,
                    prev[i - 1] + (ca != cb),
                )
            )
        prev = cur
    return prev[-1]


def distance_capped(a: str, b: str, cap: int) -> int:
    """Levenshtein distance, or ``cap + 1`` as soon as it provably exceeds ``cap``.

    Any alignment of the full strings passes through one cell per DP row, so
    once every entry of a row exceeds ``cap`` the final distance must too.
    """
    if cap < 0:
        return 0 if a == b else cap + 1
    if a == b:
        return 0
    a, b = _trim(a, b)
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a

    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j]
        append = cur.append
        best = j
        for i, ca in enumerate(a, start=1):
            v = min(
                prev[i] + 1,
                cur[i - 1] + 1,
                prev[i - 1] + (ca != cb),
            )
            append(v)
            if v < best:
                best = v
        if best > cap:
            return cap + 1
        prev = cur
    return prev[-1] if prev[-1] <= cap else cap + 1
