# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Levenshtein kernels.

Single-row dynamic program with prefix/suffix trimming, released GIL. Same
contract as libident._pykernels; libident.kernels picks whichever imports.
"""

from libc.stdlib cimport free, malloc

IMPLEMENTATION = "cython"


cdef Py_ssize_t _lev_u8(const unsigned char[:] a, const unsigned char[:] b) except -1 nogil:
    cdef Py_ssize_t start = 0
    cdef Py_ssize_t end_a = a.shape[0]
    cdef Py_ssize_t end_b = b.shape[0]
    cdef Py_ssize_t i, j, n
    cdef Py_ssize_t above, diag, left, best
    cdef Py_ssize_t *row

    while start < end_a and start < end_b and a[start] == b[start]:
        start += 1
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    if end_a - start == 0:
        return end_b - start
    if end_b - start == 0:
        return end_a - start

    n = end_b - start
    row = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    if row == NULL:
        with gil:
            raise MemoryError()
    for j in range(n + 1):
        row[j] = j
    for i in range(start, end_a):
        diag = row[0]
        row[0] = i - start + 1
        for j in range(1, n + 1):
            above = row[j]
            left = row[j - 1]
            best = diag + (a[i] != b[start + j - 1])
            if above + 1 < best:
                best = above + 1
            if left + 1 < best:
                best = left + 1
            row[j] = best
            diag = above
    best = row[n]
    free(row)
    return best


cdef Py_ssize_t _lev_u32(const unsigned int[:] a, const unsigned int[:] b) except -1 nogil:
    # Same algorithm as _lev_u8 over a wider element type. Duplicated instead
    # of fused so each loop compiles to one tight specialization.
    cdef Py_ssize_t start = 0
    cdef Py_ssize_t end_a = a.shape[0]
    cdef Py_ssize_t end_b = b.shape[0]
    cdef Py_ssize_t i, j, n
    cdef Py_ssize_t above, diag, left, best
    cdef Py_ssize_t *row

    while start < end_a and start < end_b and a[start] == b[start]:
        start += 1
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    if end_a - start == 0:
        return end_b - start
    if end_b - start == 0:
        return end_a - start

    n = end_b - start
    row = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    if row == NULL:
        with gil:
            raise MemoryError()
    for j in range(n + 1):
        row[j] = j
    for i in range(start, end_a):
        diag = row[0]
        row[0] = i - start + 1
        for j in range(1, n + 1):
            above = row[j]
            left = row[j - 1]
            best = diag + (a[i] != b[start + j - 1])
            if above + 1 < best:
                best = above + 1
            if left + 1 < best:
                best = left + 1
            row[j] = best
            diag = above
    best = row[n]
    free(row)
    return best


def levenshtein_bytes(a, b):
    """Edit distance between two byte strings."""
    cdef bytes ba = bytes(a)
    cdef bytes bb = bytes(b)
    # Memoryviews reject zero-length buffers from bytes on some Cython
    # versions; handle the trivial cases up front.
    if not ba:
        return len(bb)
    if not bb:
        return len(ba)
    cdef const unsigned char[:] va = ba
    cdef const unsigned char[:] vb = bb
    cdef Py_ssize_t out
    with nogil:
        out = _lev_u8(va, vb)
    return out


def levenshtein_u32(a, b):
    """Edit distance between two sequences of 32-bit integers."""
    from array import array

    cdef object aa = a if isinstance(a, array) and a.typecode == "I" else array("I", a)
    cdef object ab = b if isinstance(b, array) and b.typecode == "I" else array("I", b)
    if len(aa) == 0:
        return len(ab)
    if len(ab) == 0:
        return len(aa)
    cdef const unsigned int[:] va = aa
    cdef const unsigned int[:] vb = ab
    cdef Py_ssize_t out
    with nogil:
        out = _lev_u32(va, vb)
    return out
