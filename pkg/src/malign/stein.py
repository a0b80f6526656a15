"""Recombination statistics for the normal approximation of alignment scores.

The ``m`` words of length ``n`` are concatenated, sequence-major, into one
vector ``W`` of ``N = m n`` coordinates (coordinate ``j``, 1-based, is letter
``(j - 1) % n + 1`` of sequence ``(j - 1) // n + 1``).  ``W'`` is an independent
copy and ``W^A`` takes the coordinates in ``A`` from ``W'``.  With
``f = L`` and ``Delta_j f(W) = f(W) - f(W^j)``::

    T  = 1/2 sum_{A != [N]} kappa_A sum_{j not in A} Delta_j f(W) Delta_j f(W^A)
    T' = 1/2 sum_{A != [N]} kappa_A sum_{j not in A} Delta_j f(W) |Delta_j f(W^A)|
    kappa_A = 1 / (C(N, |A|) (N - |A|))

Picking ``a`` uniformly in ``0..N-1``, then ``A`` uniformly of size ``a``, then
``j`` uniformly outside ``A`` gives ``(A, j)`` probability ``kappa_A / N``, so
``T = (N / 2) E[Delta_j f(W) Delta_j f(W^A)]`` under that law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .mc import DegenerateVariance, replicate_scores
from .rng import map_replicates, salt, stream
from .scoring import ScoreModel, SequenceDistribution

EXACT_MAX_N = 14
EXACT_INNER_MAX_WORDS = 1 << 20
CHUNK = 1 << 16


class IndexOutOfRange(IndexError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PairedSample:
    W: np.ndarray
    W_prime: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.W, dtype=np.int64).reshape(-1))
        wp = np.ascontiguousarray(np.asarray(self.W_prime, dtype=np.int64).reshape(-1))
        if w.size != self.m * self.n or wp.size != w.size:
            raise ValueError(f"both vectors need m * n = {self.m * self.n} coordinates")
        w.setflags(write=False)
        wp.setflags(write=False)
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "W_prime", wp)

    @property
    def N(self) -> int:
        return self.m * self.n

    @classmethod
    def from_words(cls, words, words_prime) -> "PairedSample":
        n = len(words[0])
        if any(len(s) != n for s in list(words) + list(words_prime)):
            raise ValueError("all words must share one length")
        return cls(np.concatenate(words), np.concatenate(words_prime), n, len(words))

    @classmethod
    def draw(cls, dist: SequenceDistribution, n: int, rng: np.random.Generator) -> "PairedSample":
        return cls(draw_vector(dist, n, rng), draw_vector(dist, n, rng), n, dist.m)

    def split(self, vector: np.ndarray) -> tuple[np.ndarray, ...]:
        return tuple(vector[i * self.n : (i + 1) * self.n] for i in range(self.m))

    def check(self, model: ScoreModel) -> None:
        if self.m != model.m:
            raise ValueError(f"sample has {self.m} sequences, model arity is {model.m}")
        for v in (self.W, self.W_prime):
            if v.size and (v.min() < 0 or v.max() >= model.k):
                raise ValueError(f"letters outside alphabet of size {model.k}")


def draw_vector(dist: SequenceDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.concatenate([rng.choice(dist.k, size=n, p=dist.probs[j]) for j in range(dist.m)]).astype(np.int64)


def coordinate_probs(dist: SequenceDistribution, n: int) -> np.ndarray:
    """Letter law of each concatenated coordinate, shape ``(m n, k)``."""
    return np.repeat(dist.probs, n, axis=0)


def f_score(model: ScoreModel, paired: PairedSample, vector: np.ndarray) -> int:
    return int(_kernels.word_score(np.ascontiguousarray(vector, dtype=np.int64), paired.m, paired.n, model.flat_table, model.k))


def delta_j(model: ScoreModel, paired: PairedSample, j: int) -> Fraction:
    """``f(W) - f(W^j)`` in score units, ``j`` 1-based in ``1..m n``."""
    if not 1 <= j <= paired.N:
        raise IndexOutOfRange(f"coordinate {j} outside 1..{paired.N}")
    paired.check(model)
    swapped = paired.W.copy()
    swapped[j - 1] = paired.W_prime[j - 1]
    d = f_score(model, paired, paired.W) - f_score(model, paired, swapped)
    return model.to_units(d)


def kappa(N: int, a: int) -> Fraction:
    return Fraction(1, math.comb(N, a) * (N - a))


def kappa_normalization(N: int) -> float:
    """``sum_{A != [N]} kappa_A (N - |A|)`` accumulated subset by subset in floating point."""
    if N > 24:
        raise TooLarge("subset enumeration limited to N <= 24")
    sizes = np.array([int(x).bit_count() for x in range(1 << N)])
    sizes = sizes[sizes < N]
    w = np.array([1.0 / (math.comb(N, a) * (N - a)) for a in range(N)])
    return float(math.fsum(w[sizes] * (N - sizes)))


@dataclass(frozen=True)
class SteinEstimate:
    T: float
    T_prime: float
    mode: str
    samples_used: int = 0
    se: float = 0.0
    se_prime: float = 0.0
    T_exact: Fraction | None = None
    T_prime_exact: Fraction | None = None


def stein_exact(model: ScoreModel, paired: PairedSample) -> SteinEstimate:
    """``T`` and ``T'`` by enumerating all ``2^N`` subsets, with exact rational accumulation."""
    N = paired.N
    if N > EXACT_MAX_N:
        raise TooLarge(f"exact enumeration needs m n <= {EXACT_MAX_N}, got {N}")
    paired.check(model)
    F = _kernels.mask_scores(paired.W, paired.W_prime, paired.m, paired.n, model.flat_table, model.k)
    masks = np.arange(1 << N, dtype=np.int64)
    sizes = np.array([int(x).bit_count() for x in range(1 << N)], dtype=np.int64)
    sum_t = [0] * N
    sum_p = [0] * N
    for j in range(N):
        bit = 1 << j
        d0 = int(F[0] - F[bit])
        if d0 == 0:
            continue
        idx = masks[(masks & bit) == 0]
        da = F[idx] - F[idx | bit]
        by_size = np.zeros(N, dtype=np.int64)
        by_abs = np.zeros(N, dtype=np.int64)
        np.add.at(by_size, sizes[idx], da)
        np.add.at(by_abs, sizes[idx], np.abs(da))
        for a in range(N):
            sum_t[a] += d0 * int(by_size[a])
            sum_p[a] += d0 * int(by_abs[a])
    unit = model.scale**2
    T = sum(kappa(N, a) * sum_t[a] for a in range(N)) / (2 * unit)
    Tp = sum(kappa(N, a) * sum_p[a] for a in range(N)) / (2 * unit)
    return SteinEstimate(float(T), float(Tp), "exact", 1 << N, 0.0, 0.0, Fraction(T), Fraction(Tp))


def _draw_recombinations(N: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    sizes = rng.integers(0, N, size=count)
    perm = rng.permuted(np.tile(np.arange(N, dtype=np.int64), (count, 1)), axis=1)
    return perm, sizes.astype(np.int64)


def _products(model, paired_w, wp, perm, sizes, f_single, m, n) -> tuple[np.ndarray, np.ndarray]:
    d0, da = _kernels.recombination_samples(paired_w, wp, perm, sizes, f_single, m, n, model.flat_table, model.k)
    return d0.astype(np.float64) * da, d0.astype(np.float64) * np.abs(da)


def stein_sampled(model: ScoreModel, paired: PairedSample, samples: int, rng: np.random.Generator) -> SteinEstimate:
    """Unbiased Monte Carlo estimate of ``T`` and ``T'`` for the fixed pair ``(W, W')``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    paired.check(model)
    N, m, n = paired.N, paired.m, paired.n
    f_single = _kernels.single_site_scores(paired.W, m, n, model.flat_table, model.k)
    wp = paired.W_prime.reshape(1, -1)
    x_parts, p_parts = [], []
    done = 0
    while done < samples:
        c = min(CHUNK, samples - done)
        perm, sizes = _draw_recombinations(N, c, rng)
        x, p = _products(model, paired.W, wp, perm, sizes, f_single, m, n)
        x_parts.append(x)
        p_parts.append(p)
        done += c
    x = np.concatenate(x_parts)
    p = np.concatenate(p_parts)
    factor = N / 2 / model.scale**2
    se = lambda v: float(v.std(ddof=1) / math.sqrt(v.size)) * factor if v.size > 1 else 0.0
    return SteinEstimate(float(x.mean()) * factor, float(p.mean()) * factor, "sampled", samples, se(x), se(p))


def conditional_T_exact(model: ScoreModel, dist: SequenceDistribution, n: int, w: np.ndarray) -> tuple[float, float]:
    """``E(T | W = w)`` and ``E(T' | W = w)`` exactly, in score units squared."""
    N = model.m * n
    if model.k**N > EXACT_INNER_MAX_WORDS or N > EXACT_MAX_N:
        raise TooLarge(f"exact conditional expectation needs k^N <= {EXACT_INNER_MAX_WORDS} and N <= {EXACT_MAX_N}")
    fall = _all_words(model, n)
    kap = np.array([1.0 / (math.comb(N, a) * (N - a)) for a in range(N)])
    t, tp = _kernels.conditional_recombination(
        np.ascontiguousarray(w, dtype=np.int64), coordinate_probs(dist, n), fall, kap, model.k
    )
    unit = model.scale**2
    return t / unit, tp / unit


_WORD_CACHE: dict[tuple, np.ndarray] = {}


def _all_words(model: ScoreModel, n: int) -> np.ndarray:
    key = (id(model), n)
    if key not in _WORD_CACHE:
        _WORD_CACHE.clear()
        _WORD_CACHE[key] = _kernels.all_word_scores(model.m, n, model.flat_table, model.k)
    return _WORD_CACHE[key]


@dataclass(frozen=True)
class BoundReport:
    n: int
    N: int
    outer_reps: int
    inner: str
    sigma2: float
    sigma2_se: float
    term_varT: float
    term_varT_se: float
    term_varTprime: float
    term_varTprime_se: float
    term_sixth: float
    term_sixth_se: float
    term_third: float
    term_third_se: float
    total: float
    total_se: float
    var_cond_T: float
    var_cond_Tprime: float


def _variance_se(x: np.ndarray) -> tuple[float, float]:
    """Sample variance and its large-sample standard error."""
    R = x.size
    v = float(x.var(ddof=1))
    m4 = float(((x - x.mean()) ** 4).mean())
    return v, math.sqrt(max(m4 - v * v * (R - 3) / (R - 1), 0.0) / R)


def _sqrt_se(v: float, se: float) -> tuple[float, float]:
    if v <= 0:
        return 0.0, math.sqrt(se) if se > 0 else 0.0
    r = math.sqrt(v)
    return r, se / (2 * r)


def bound_report(
    model: ScoreModel,
    dist: SequenceDistribution,
    n: int,
    outer_reps: int,
    inner_samples: int,
    seed: int = 0,
    inner: str = "sampled",
    sigma_reps: int = 2000,
    moment_reps: int | None = None,
    workers: int | None = None,
) -> BoundReport:
    """The four terms of the Kolmogorov-distance bound, each with a standard error.

    Outer draws of ``W`` are shared between ``inner="sampled"`` (fresh ``W'``,
    ``A`` and ``j`` per inner sample) and ``inner="exact"`` (exact conditional
    expectation), so the two modes differ only by inner noise.  The variance
    of the sampled inner means is corrected by subtracting their mean squared
    standard error.  ``sigma^2`` comes from a separate replicate set.
    """
    if outer_reps < 30:
        raise ValueError("outer_reps must be >= 30")
    if inner not in ("sampled", "exact"):
        raise ValueError("inner must be 'sampled' or 'exact'")
    if inner_samples < 2 and inner == "sampled":
        raise ValueError("inner_samples must be >= 2")
    dist.check_model(model)
    m = model.m
    N = m * n
    moment_reps = moment_reps or outer_reps
    unit2 = float(model.scale) ** 2

    sig = replicate_scores(model, dist, (n,) * m, seed, sigma_reps, salt("stein-sigma", n), workers)
    s_units = sig.astype(np.float64) / model.scale
    sigma2, sigma2_se = _variance_se(s_units)
    if sigma2 == 0.0:
        raise DegenerateVariance("Var(L) is zero; the bound is undefined")

    outer_purpose = salt("stein-outer", n)

    def one_outer(i: int) -> tuple[float, float, float, float]:
        rng = stream(seed, i, outer_purpose)
        w = draw_vector(dist, n, rng)
        if inner == "exact":
            t, tp = conditional_T_exact(model, dist, n, w)
            return t, tp, 0.0, 0.0
        f_single = _kernels.single_site_scores(w, m, n, model.flat_table, model.k)
        wp = np.stack([draw_vector(dist, n, rng) for _ in range(inner_samples)])
        perm, sizes = _draw_recombinations(N, inner_samples, rng)
        x, p = _products(model, w, wp, perm, sizes, f_single, m, n)
        factor = N / 2 / unit2
        x = x * factor
        p = p * factor
        return float(x.mean()), float(p.mean()), float(x.var(ddof=1) / x.size), float(p.var(ddof=1) / p.size)

    outer = np.array(map_replicates(one_outer, outer_reps, workers))
    vt, vt_se = _variance_se(outer[:, 0])
    vp, vp_se = _variance_se(outer[:, 1])
    # inner noise inflates the spread of the conditional-mean estimates
    vt -= float(outer[:, 2].mean())
    vp -= float(outer[:, 3].mean())
    rt, rt_se = _sqrt_se(vt, vt_se)
    rp, rp_se = _sqrt_se(vp, vp_se)

    moment_purpose = salt("stein-moments", n)

    def one_moment(i: int) -> np.ndarray:
        rng = stream(seed, i, moment_purpose)
        w = draw_vector(dist, n, rng)
        wp = draw_vector(dist, n, rng)
        fw = _kernels.word_score(w, m, n, model.flat_table, model.k)
        cache = _kernels.single_site_scores(w, m, n, model.flat_table, model.k)
        return np.abs(fw - cache[np.arange(N), wp]).astype(np.float64) / model.scale

    d = np.array(map_replicates(one_moment, moment_reps, workers))
    g6, g6_se = _root_moment_sum(d**6)
    g3, g3_se = _root_moment_sum(d**3)

    s3 = sigma2**1.5
    c3 = math.sqrt(2 * math.pi) / 16
    term_t = rt / sigma2
    term_p = rp / sigma2
    term_6 = g6 / (4 * s3)
    term_3 = c3 * g3 / s3
    rel_s2 = sigma2_se / sigma2
    se_t = math.hypot(rt_se / sigma2, term_t * rel_s2)
    se_p = math.hypot(rp_se / sigma2, term_p * rel_s2)
    se_6 = math.hypot(g6_se / (4 * s3), 1.5 * term_6 * rel_s2)
    se_3 = math.hypot(c3 * g3_se / s3, 1.5 * term_3 * rel_s2)
    total = term_t + term_p + term_6 + term_3
    # numerators are correlated through shared draws: add their errors linearly
    num_se = rt_se / sigma2 + rp_se / sigma2 + g6_se / (4 * s3) + c3 * g3_se / s3
    sig_part = (term_t + term_p + 1.5 * (term_6 + term_3)) * rel_s2
    return BoundReport(
        n=n,
        N=N,
        outer_reps=outer_reps,
        inner=inner,
        sigma2=sigma2,
        sigma2_se=sigma2_se,
        term_varT=term_t,
        term_varT_se=se_t,
        term_varTprime=term_p,
        term_varTprime_se=se_p,
        term_sixth=term_6,
        term_sixth_se=se_6,
        term_third=term_3,
        term_third_se=se_3,
        total=total,
        total_se=math.hypot(num_se, sig_part),
        var_cond_T=vt,
        var_cond_Tprime=vp,
    )


def _root_moment_sum(samples: np.ndarray) -> tuple[float, float]:
    """``sum_j sqrt(E X_j)`` from rows of per-coordinate samples, with a delta-method SE."""
    R = samples.shape[0]
    mu = samples.mean(axis=0)
    g = float(np.sqrt(mu).sum())
    grad = np.where(mu > 0, 0.5 / np.sqrt(np.where(mu > 0, mu, 1.0)), 0.0)
    cov = np.cov(samples, rowvar=False) / R if R > 1 else np.zeros((mu.size, mu.size))
    return g, float(math.sqrt(max(grad @ np.atleast_2d(cov) @ grad, 0.0)))
