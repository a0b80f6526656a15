"""Slow, literal second implementations used as test oracles.

Nothing here imports the numba kernels; each function follows the defining
formula as directly as possible.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


def memo_score(seqs, table) -> int:
    """Optimal alignment score by memoized recursion on index tuples."""
    seqs = [tuple(int(a) for a in s) for s in seqs]
    m = len(seqs)

    @lru_cache(maxsize=None)
    def L(idx):
        if min(idx) == 0:
            return 0
        best = 0
        for j in range(m):
            prev = list(idx)
            prev[j] -= 1
            best = max(best, L(tuple(prev)))
        letters = tuple(seqs[j][idx[j] - 1] for j in range(m))
        diag = tuple(i - 1 for i in idx)
        return max(best, L(diag) + int(table[letters]))

    return L(tuple(len(s) for s in seqs))


def literal_breakpoints(path, lengths, v):
    """``r_k`` = largest index of each sequence matched to a position <= v k of sequence 1."""
    n1 = lengths[0]
    d = n1 // v
    m = len(lengths)
    rows = [[v * k for k in range(d + 1)]]
    for j in range(1, m):
        r = [0]
        for k in range(1, d):
            matched = [t[j] for t in path if t[0] <= v * k]
            r.append(max(matched) if matched else 0)
        r.append(lengths[j])
        rows.append(r)
    return rows


def literal_good_fraction(breakpoints, v, p_lo, p_hi):
    d = len(breakpoints[0]) - 1
    good = 0
    for k in range(1, d + 1):
        ok = True
        for j in range(1, len(breakpoints)):
            w = breakpoints[j][k] - breakpoints[j][k - 1]
            if not (v * p_lo[j - 1] <= w <= v * p_hi[j - 1]):
                ok = False
        good += ok
    return good / d


def exact_moments(table, probs, n):
    """Exact mean and variance of the optimal score over all words (tiny n only)."""
    probs = np.asarray(probs)
    m, k = probs.shape
    mean = Fraction(0)
    second = Fraction(0)
    for words in itertools.product(itertools.product(range(k), repeat=n), repeat=m):
        w = Fraction(1)
        for j, word in enumerate(words):
            for a in word:
                w *= Fraction(probs[j, a]).limit_denominator(1 << 20)
        if w == 0:
            continue
        s = memo_score(words, table)
        mean += w * s
        second += w * s * s
    return mean, second - mean * mean


def stein_triple_loop(table, W, Wp, m, n):
    """T and T' from the defining sums: every proper subset A, every j outside A."""
    N = m * n

    def f(vec):
        return memo_score([vec[i * n : (i + 1) * n] for i in range(m)], table)

    def swap(vec, idx):
        out = list(vec)
        for i in idx:
            out[i] = Wp[i]
        return out

    W = list(W)
    fW = f(W)
    T = Fraction(0)
    Tp = Fraction(0)
    for a in range(N):
        kap = Fraction(1, math.comb(N, a) * (N - a))
        for A in itertools.combinations(range(N), a):
            WA = swap(W, A)
            fWA = f(WA)
            for j in range(N):
                if j in A:
                    continue
                d0 = fW - f(swap(W, (j,)))
                dA = fWA - f(swap(WA, (j,)))
                T += kap * d0 * dA
                Tp += kap * d0 * abs(dA)
    return T / 2, Tp / 2


def lis_brute(perm) -> int:
    perm = list(perm)
    best = 0
    for r in range(len(perm) + 1):
        for idx in itertools.combinations(range(len(perm)), r):
            vals = [perm[i] for i in idx]
            if all(a < b for a, b in zip(vals, vals[1:])):
                best = max(best, r)
    return best


def normal_cdf_series(x: float, terms: int = 50) -> float:
    """``1/2 + phi-series``: the Taylor expansion of the error function."""
    s = 0.0
    for k in range(terms):
        s += (-1) ** k * x ** (2 * k + 1) / (2**k * math.factorial(k) * (2 * k + 1))
    return 0.5 + s / math.sqrt(2 * math.pi)


def kolmogorov_literal(samples, cdf) -> float:
    """sup_x |F_n(x) - cdf(x)| checked at every jump, from both sides."""
    xs = sorted(samples)
    N = len(xs)
    best = 0.0
    for x in set(xs):
        below = sum(1 for s in xs if s < x) / N
        at = sum(1 for s in xs if s <= x) / N
        best = max(best, abs(at - cdf(x)), abs(below - cdf(x)))
    return best
