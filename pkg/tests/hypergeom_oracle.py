"""Exact upper tail of the hypergeometric law by enumerating every n-subset of the universe."""

from fractions import Fraction
from functools import lru_cache
from itertools import combinations


@lru_cache(maxsize=None)
def overlap_histogram(N: int, K: int, n: int) -> tuple[int, ...]:
    """Number of n-subsets of {0..N-1} hitting the first K items exactly x times, x = 0..n."""
    hist = [0] * (n + 1)
    for subset in combinations(range(N), n):
        hist[sum(1 for v in subset if v < K)] += 1
    return tuple(hist)


def upper_tail(x: int, n: int, K: int, N: int) -> Fraction:
    hist = overlap_histogram(N, K, n)
    return Fraction(sum(hist[x:]), sum(hist))
