# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Two kernels carry nearly all of the pairwise-comparison cost: the edit
distance over pixel sequences (a full O(m*n) dynamic program per image
pair) and the match/transposition scan behind the short-string metric.
Both have pure-Python twins in ``_kernels_py`` with identical results.
"""

from libc.stdlib cimport free, malloc


def backend_name():
    return "compiled"


def levenshtein_u8(const unsigned char[::1] a, const unsigned char[::1] b,
                   int tol=0):
    """Edit distance between two byte sequences.

    Symbols x, y count as equal when ``abs(x - y) <= tol``. Insertions,
    deletions and substitutions all cost 1.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = b.shape[0]
    if m == 0:
        return n
    if n == 0:
        return m
    cdef int *prev = <int *> malloc((n + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((n + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        if prev != NULL:
            free(prev)
        if cur != NULL:
            free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int cost, best, cand, d, ai
    cdef int *tmp
    cdef int result
    with nogil:
        for j in range(n + 1):
            prev[j] = <int> j
        for i in range(1, m + 1):
            cur[0] = <int> i
            ai = a[i - 1]
            for j in range(1, n + 1):
                d = ai - <int> b[j - 1]
                if d < 0:
                    d = -d
                cost = 0 if d <= tol else 1
                best = prev[j - 1] + cost
                cand = prev[j] + 1
                if cand < best:
                    best = cand
                cand = cur[j - 1] + 1
                if cand < best:
                    best = cand
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[n]
    free(prev)
    free(cur)
    return result


def jaro_u32(const unsigned int[::1] s1, const unsigned int[::1] s2):
    """Jaro similarity over two non-empty code-point sequences."""
    cdef Py_ssize_t len1 = s1.shape[0]
    cdef Py_ssize_t len2 = s2.shape[0]
    cdef Py_ssize_t longer = len1 if len1 >= len2 else len2
    cdef Py_ssize_t window = longer // 2 - 1
    if window < 0:
        window = 0
    cdef char *flags1 = <char *> malloc(len1)
    cdef char *flags2 = <char *> malloc(len2)
    if flags1 == NULL or flags2 == NULL:
        if flags1 != NULL:
            free(flags1)
        if flags2 != NULL:
            free(flags2)
        raise MemoryError()
    cdef Py_ssize_t i, j, lo, hi, k
    cdef Py_ssize_t matches = 0
    cdef Py_ssize_t half_transpositions = 0
    cdef double mm, result
    with nogil:
        for i in range(len1):
            flags1[i] = 0
        for j in range(len2):
            flags2[j] = 0
        for i in range(len1):
            lo = i - window if i > window else 0
            hi = i + window + 1
            if hi > len2:
                hi = len2
            for j in range(lo, hi):
                if flags2[j] == 0 and s2[j] == s1[i]:
                    flags1[i] = 1
                    flags2[j] = 1
                    matches += 1
                    break
        if matches == 0:
            result = 0.0
        else:
            k = 0
            for i in range(len1):
                if flags1[i] == 0:
                    continue
                while flags2[k] == 0:
                    k += 1
                if s1[i] != s2[k]:
                    half_transpositions += 1
                k += 1
            mm = <double> matches
            result = (mm / len1 + mm / len2
                      + (mm - half_transpositions / 2.0) / mm) / 3.0
    free(flags1)
    free(flags2)
    return result
