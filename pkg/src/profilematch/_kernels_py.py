"""Pure-Python twins of the compiled kernels.

Selected automatically when the extension is missing (or when
``PROFILEMATCH_PURE=1``). Results are identical to the compiled versions;
only speed differs. The edit distance uses a vectorised row sweep: the
insertion chain ``cur[j] = min(base[j], cur[j-1] + 1)`` is a min-plus
prefix scan, which numpy expresses as ``minimum.accumulate(base - j) + j``.
"""

import numpy as np


def backend_name():
    return "python"


def levenshtein_u8(a, b, tol=0):
    """Edit distance between two uint8 sequences; |x-y| <= tol matches."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    m, n = a.shape[0], b.shape[0]
    if m == 0:
        return int(n)
    if n == 0:
        return int(m)
    bi = b.astype(np.int16)
    offsets = np.arange(n + 1)
    prev = offsets.copy()
    base = np.empty(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        cost = (np.abs(int(a[i - 1]) - bi) > tol).astype(np.int64)
        base[0] = i
        np.minimum(prev[:-1] + cost, prev[1:] + 1, out=base[1:])
        cur = np.minimum.accumulate(base - offsets) + offsets
        prev = cur
    return int(prev[n])


def jaro_u32(s1, s2):
    """Jaro similarity over two non-empty code-point sequences."""
    len1, len2 = len(s1), len(s2)
    window = max(len1, len2) // 2 - 1
    if window < 0:
        window = 0
    flags1 = [False] * len1
    flags2 = [False] * len2
    matches = 0
    for i in range(len1):
        lo = i - window if i > window else 0
        hi = min(i + window + 1, len2)
        c = s1[i]
        for j in range(lo, hi):
            if not flags2[j] and s2[j] == c:
                flags1[i] = True
                flags2[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    diffs = 0
    k = 0
    for i in range(len1):
        if not flags1[i]:
            continue
        while not flags2[k]:
            k += 1
        if s1[i] != s2[k]:
            diffs += 1
        k += 1
    m = float(matches)
    return (m / len1 + m / len2 + (m - diffs / 2.0) / m) / 3.0
