"""Multi-index enumeration and combinatorics."""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial


@lru_cache(maxsize=None)
def multi_indices(dim, order):
    """All multi-indices in N_0^dim of total order `order`, lexicographic."""
    if dim == 1:
        return ((order,),)
    out = []
    for first in range(order, -1, -1):
        for rest in multi_indices(dim - 1, order - first):
            out.append((first,) + rest)
    return tuple(sorted(out, reverse=True))


def indices_below(alpha):
    """All beta with beta <= alpha componentwise."""
    if len(alpha) == 0:
        return [()]
    tails = indices_below(alpha[1:])
    return [(b,) + t for b in range(alpha[0] + 1) for t in tails]


def multi_binomial(alpha, beta):
    """binom(alpha, beta) = prod_j binom(alpha_j, beta_j); 0 unless beta <= alpha."""
    total = 1
    for a, b in zip(alpha, beta):
        if b > a:
            return 0
        total *= comb(a, b)
    return total


def shifted_factorial(n):
    """n! with the convention n! = 1 for n <= 0."""
    return factorial(n) if n > 0 else 1


def pos(n):
    """(n)_+ = max(n, 0)."""
    return n if n > 0 else 0
