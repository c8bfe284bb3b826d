"""Multi-index bookkeeping for derivative arrays.

Multi-indices are tuples of non-negative ints of fixed length d. They index
partial derivatives in the frequency and space variables throughout the
symbol calculus, so everything here is exact integer arithmetic.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product
from typing import Iterator, Tuple

MultiIndex = Tuple[int, ...]


def zero_index(d: int) -> MultiIndex:
    return (0,) * d


def index_order(alpha: MultiIndex) -> int:
    """|alpha| = alpha_1 + ... + alpha_d."""
    return sum(alpha)


@lru_cache(maxsize=None)
def indices_of_order(d: int, k: int) -> tuple[MultiIndex, ...]:
    """All multi-indices in dimension d with |alpha| == k, lexicographic."""
    if d == 1:
        return ((k,),)
    out = []
    for first in range(k, -1, -1):
        for rest in indices_of_order(d - 1, k - first):
            out.append((first,) + rest)
    return tuple(out)


def indices_up_to(d: int, k: int) -> Iterator[MultiIndex]:
    """All multi-indices with |alpha| <= k, by increasing order."""
    for j in range(k + 1):
        yield from indices_of_order(d, j)


def factorial(alpha: MultiIndex) -> int:
    """alpha! = prod_i alpha_i!"""
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def binomial(alpha: MultiIndex, beta: MultiIndex) -> int:
    """prod_i C(alpha_i, beta_i); zero unless beta <= alpha componentwise."""
    out = 1
    for a, b in zip(alpha, beta):
        if b > a:
            return 0
        out *= math.comb(a, b)
    return out


def add_indices(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub_indices(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a - b for a, b in zip(alpha, beta))


def leq(beta: MultiIndex, alpha: MultiIndex) -> bool:
    return all(b <= a for a, b in zip(alpha, beta))


@lru_cache(maxsize=None)
def lower_indices(alpha: MultiIndex) -> tuple[MultiIndex, ...]:
    """All beta with beta <= alpha componentwise (includes 0 and alpha)."""
    ranges = [range(a + 1) for a in alpha]
    return tuple(tuple(b) for b in product(*ranges))
