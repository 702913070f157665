"""Witness search for the "good" property of odd numbers.

An odd m is good when every j in [1, m-1] admits a k in [1, m-1] such that,
among the three circle points 0, k/m, kj/m (mod 1), either exactly two
coincide, or two of the three circular gaps satisfy the spacing condition:
both in the open window (1/3, 1/2) once sorted, or exactly one of the two
exceptional pairs (6/19, 9/19), (12/37, 16/37).

All arithmetic is exact: gaps are integer numerators over the common
denominator m, and the window tests are integer cross-multiplications.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

SPECIAL_PAIRS = ((Fraction(6, 19), Fraction(9, 19)), (Fraction(12, 37), Fraction(16, 37)))

_CHUNK = 256  # witness scan block size; most witnesses are small


def spacing_ok(d1: Fraction, d2: Fraction, allow_special_pairs: bool = True) -> bool:
    """Exact test: 1/3 < d1 <= d2 < 1/2, or (d1, d2) an exceptional pair."""
    d1, d2 = Fraction(d1), Fraction(d2)
    if Fraction(1, 3) < d1 <= d2 < Fraction(1, 2):
        return True
    return allow_special_pairs and (d1, d2) in SPECIAL_PAIRS


def _pair_ok(lo: int, hi: int, m: int, allow_special_pairs: bool) -> bool:
    # integer form of spacing_ok on gaps lo/m <= hi/m
    if 3 * lo > m and 2 * hi < m:
        return True
    if allow_special_pairs:
        if 19 * lo == 6 * m and 19 * hi == 9 * m:
            return True
        if 37 * lo == 12 * m and 37 * hi == 16 * m:
            return True
    return False


def witness_check(m: int, j: int, k: int, allow_special_pairs: bool = True) -> bool:
    """Does k witness j?  Scalar exact re-evaluation of the three points."""
    k %= m
    if k == 0:
        return False  # all three points coincide
    r = k * j % m
    if r == 0 or r == k:
        return True  # exactly two points coincide (k != 0 rules out all three)
    t1, t2 = min(k, r), max(k, r)
    gaps = (t1, t2 - t1, m - t2)
    for x, y in ((0, 1), (0, 2), (1, 2)):
        lo, hi = min(gaps[x], gaps[y]), max(gaps[x], gaps[y])
        if _pair_ok(lo, hi, m, allow_special_pairs):
            return True
    return False


def witness_for(m: int, j: int, allow_special_pairs: bool = True) -> int | None:
    """Smallest k in [1, m-1] witnessing j, or None."""
    if m < 3 or m % 2 == 0:
        raise ValueError(f"m must be odd and >= 3, got {m}")
    if not 1 <= j <= m - 1:
        raise ValueError(f"j must be in [1, m-1], got {j}")
    for start in range(1, m, _CHUNK):
        ks = np.arange(start, min(start + _CHUNK, m), dtype=np.int64)
        rs = ks * j % m
        ok = (rs == 0) | (rs == ks)
        t1 = np.minimum(ks, rs)
        t2 = np.maximum(ks, rs)
        g = (t1, t2 - t1, m - t2)
        for x, y in ((0, 1), (0, 2), (1, 2)):
            lo = np.minimum(g[x], g[y])
            hi = np.maximum(g[x], g[y])
            ok |= (3 * lo > m) & (2 * hi < m)
            if allow_special_pairs:
                ok |= (19 * lo == 6 * m) & (19 * hi == 9 * m)
                ok |= (37 * lo == 12 * m) & (37 * hi == 16 * m)
        hits = np.flatnonzero(ok)
        if hits.size:
            return int(ks[hits[0]])
    return None


@dataclass
class GoodnessCertificate:
    m: int
    good: bool
    witnesses: dict[int, int] = field(default_factory=dict)
    failing_j: tuple[int, ...] = ()
    j_range: tuple[int, int] = (0, 0)
    allow_special_pairs: bool = True

    def lines(self):
        """Machine-readable record lines, one per j."""
        lo, hi = self.j_range
        for j in range(lo, hi + 1):
            k = self.witnesses.get(j)
            yield f"{j} {k if k is not None else 'NONE'}"


def is_good(
    m: int, full_range: bool = False, allow_special_pairs: bool = True
) -> GoodnessCertificate:
    """Certificate for the good property of odd m.

    The default search range [2, (m+1)/2] suffices: j=1 is witnessed by k=1,
    and a witness for j also witnesses m+1-j (the three points reflect).
    """
    if m < 3 or m % 2 == 0:
        raise ValueError(f"m must be odd and >= 3, got {m}")
    j_lo, j_hi = (1, m - 1) if full_range else (2, (m + 1) // 2)
    witnesses: dict[int, int] = {}
    failing: list[int] = []
    for j in range(j_lo, j_hi + 1):
        k = witness_for(m, j, allow_special_pairs)
        if k is None:
            failing.append(j)
        else:
            witnesses[j] = k
    return GoodnessCertificate(
        m=m,
        good=not failing,
        witnesses=witnesses,
        failing_j=tuple(failing),
        j_range=(j_lo, j_hi),
        allow_special_pairs=allow_special_pairs,
    )


def verify_certificate(cert: GoodnessCertificate) -> bool:
    """Re-verify every recorded witness with exact fractions."""
    for j, k in cert.witnesses.items():
        points = sorted({Fraction(0), Fraction(k, cert.m) % 1, Fraction(k * j, cert.m) % 1})
        if len(points) == 2:
            continue  # two coincide (never all three: k is nonzero mod m)
        if len(points) != 3:
            return False
        gaps = (points[1] - points[0], points[2] - points[1], 1 - points[2] + points[0])
        hit = False
        for x, y in ((0, 1), (0, 2), (1, 2)):
            lo, hi = sorted((gaps[x], gaps[y]))
            if spacing_ok(lo, hi, cert.allow_special_pairs):
                hit = True
                break
        if not hit:
            return False
    return True
