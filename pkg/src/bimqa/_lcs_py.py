"""Pure-Python LCS length, used when the compiled kernel is unavailable.

Bit-parallel algorithm of Allison & Dix / Hyyro: the shorter string indexes
the bits of one big integer ``V``; each character of the longer string costs
a constant number of big-int operations, so the run time is
O(|A| * |B| / w) and memory is O(sigma * |A|) bits for the match masks.
"""

from __future__ import annotations


def match_masks(a: str) -> dict[str, int]:
    masks: dict[str, int] = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    return masks


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence of ``a`` and ``b``."""
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return 0
    masks = match_masks(a)
    full = (1 << m) - 1
    v = full
    get = masks.get
    for ch in b:
        mask = get(ch)
        if mask is None:
            continue
        u = v & mask
        v = ((v + u) | (v - u)) & full
    return m - v.bit_count()


def lcs_length_dp(a: str, b: str) -> int:
    """Two-row dynamic program; the textbook reference, O(|A| * |B|) time."""
    if len(a) > len(b):
        a, b = b, a
    prev = [0] * (len(a) + 1)
    for cb in b:
        cur = [0]
        for j, ca in enumerate(a, start=1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]
