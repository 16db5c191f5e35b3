# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LCS length: the bit-parallel recurrence over arrays of 64-bit words.

Memory is (sigma + 1) * ceil(|A| / 64) words for the match masks and the state
vector, where A is the shorter string and sigma the number of distinct
characters in it. Buffers come from PyMem_Malloc so tracemalloc sees them.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.stdint cimport uint64_t
from libc.string cimport memset

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

# Above this many bytes of masks the quadratic-time, linear-space DP is used.
MASK_BUDGET_BYTES = 64 * 1024 * 1024


cdef Py_ssize_t _bitparallel(Py_ssize_t m, Py_ssize_t words, uint64_t* masks, uint64_t* v,
                             Py_ssize_t* idx, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j, k, c, ones = 0
    cdef uint64_t vk, mk, uk, s, s2, carry
    cdef uint64_t last = (<uint64_t> -1) if m % 64 == 0 else ((<uint64_t> 1 << (m % 64)) - 1)
    for k in range(words):
        v[k] = <uint64_t> -1
    v[words - 1] = last
    for j in range(n):
        c = idx[j]
        if c < 0:
            continue
        carry = 0
        for k in range(words):
            vk = v[k]
            mk = masks[c * words + k]
            uk = vk & mk
            s = vk + uk
            s2 = s + carry
            carry = (s < vk) | (s2 < s)
            v[k] = s2 | (vk & ~mk)
        v[words - 1] &= last
    for k in range(words):
        ones += __builtin_popcountll(v[k])
    return m - ones


cdef Py_ssize_t _dp(Py_ssize_t* ia, Py_ssize_t m, Py_ssize_t* ib, Py_ssize_t n) except -1:
    cdef Py_ssize_t* prev = <Py_ssize_t*> PyMem_Malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* cur = <Py_ssize_t*> PyMem_Malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t* tmp
    cdef Py_ssize_t i, j, best
    if prev == NULL or cur == NULL:
        PyMem_Free(prev)
        PyMem_Free(cur)
        raise MemoryError()
    memset(prev, 0, (m + 1) * sizeof(Py_ssize_t))
    cur[0] = 0
    for i in range(n):
        for j in range(1, m + 1):
            if ia[j - 1] == ib[i]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = prev[j] if prev[j] > cur[j - 1] else cur[j - 1]
        tmp = prev
        prev = cur
        cur = tmp
    best = prev[m]
    PyMem_Free(prev)
    PyMem_Free(cur)
    return best


def lcs_length(str a, str b):
    """Length of the longest common subsequence of ``a`` and ``b``."""
    if len(a) > len(b):
        a, b = b, a
    cdef Py_ssize_t m = len(a), n = len(b), words, sigma, i, c
    if m == 0:
        return 0
    alphabet = {}
    for ch in a:
        if ch not in alphabet:
            alphabet[ch] = len(alphabet)
    sigma = len(alphabet)
    words = (m + 63) // 64
    cdef Py_ssize_t* ia = <Py_ssize_t*> PyMem_Malloc(m * sizeof(Py_ssize_t))
    cdef Py_ssize_t* ib = <Py_ssize_t*> PyMem_Malloc(n * sizeof(Py_ssize_t))
    cdef uint64_t* masks = <uint64_t*> 0
    cdef uint64_t* v = <uint64_t*> 0
    try:
        if ia == NULL or ib == NULL:
            raise MemoryError()
        for i in range(m):
            ia[i] = alphabet[a[i]]
        for i in range(n):
            ib[i] = alphabet.get(b[i], -1)
        if sigma * words * 8 > MASK_BUDGET_BYTES:
            return _dp(ia, m, ib, n)
        masks = <uint64_t*> PyMem_Malloc(sigma * words * sizeof(uint64_t))
        v = <uint64_t*> PyMem_Malloc(words * sizeof(uint64_t))
        if masks == NULL or v == NULL:
            raise MemoryError()
        memset(masks, 0, sigma * words * sizeof(uint64_t))
        for i in range(m):
            c = ia[i]
            masks[c * words + i // 64] |= (<uint64_t> 1) << (i % 64)
        with nogil:
            i = _bitparallel(m, words, masks, v, ib, n)
        return i
    finally:
        PyMem_Free(ia)
        PyMem_Free(ib)
        PyMem_Free(masks)
        PyMem_Free(v)


def lcs_length_dp(str a, str b):
    """Two-row dynamic program over the same index arrays; linear space."""
    if len(a) > len(b):
        a, b = b, a
    cdef Py_ssize_t m = len(a), n = len(b), i
    if m == 0:
        return 0
    alphabet = {}
    cdef Py_ssize_t* ia = <Py_ssize_t*> PyMem_Malloc(m * sizeof(Py_ssize_t))
    cdef Py_ssize_t* ib = <Py_ssize_t*> PyMem_Malloc(n * sizeof(Py_ssize_t))
    try:
        if ia == NULL or ib == NULL:
            raise MemoryError()
        for i in range(m):
            ia[i] = alphabet.setdefault(a[i], len(alphabet))
        for i in range(n):
            ib[i] = alphabet.get(b[i], -1)
        return _dp(ia, m, ib, n)
    finally:
        PyMem_Free(ia)
        PyMem_Free(ib)
