"""Independent reference implementations used only by the tests."""
from collections import Counter
from fractions import Fraction
from itertools import combinations


def brute_lcs(a, b) -> int:
    """Longest common subsequence by enumerating subsequences of the shorter list."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(x in it for x in sub)

    for k in range(len(short), 0, -1):
        if any(is_subseq(c, long_) for c in combinations(short, k)):
            return k
    return 0


def clipped_ngrams(hyp, ref, n) -> tuple[int, int, int]:
    h = Counter(tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1))
    r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
    return sum((h & r).values()), sum(h.values()), sum(r.values())


def prf(m, nh, nr):
    p = Fraction(m, nh) if nh else Fraction(0)
    r = Fraction(m, nr) if nr else Fraction(0)
    f = 2 * p * r / (p + r) if p + r else Fraction(0)
    return p, r, f
