"""Two variants of the pairwise problem: Bernoulli matching and permutation words.

Bernoulli matching runs the m = 2 recursion on a score field: either the
field ``1{X_i = Y_j}`` induced by two random words, or a field of i.i.d.
Bernoulli(p) entries.  The permutation study aligns the value sequences of two
uniform random permutations of ``[n]`` under the window score
``(1 - |a - b| / (n - 1)) * 1{|a - b| <= c}``; at ``c = 0`` this is the equality
indicator and the score is a longest increasing subsequence.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from . import _kernels
from .rng import map_replicates, salt, stream
from .scoring import MAX_TABLE_ENTRIES, ModelTooLarge, ScoreModel

MODES = ("dependent", "independent")


class NonSquare(ValueError):
    pass


class NotPermutation(ValueError):
    pass


@dataclass(frozen=True)
class BmConfig:
    n: int
    mode: str = "dependent"
    p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")

    @property
    def alphabet(self) -> int:
        """Letters used in dependent mode; a match then has probability ``1 / k``."""
        return max(1, round(1 / self.p))


@dataclass(frozen=True)
class PermConfig:
    n: int
    c: float = 0.0
    seed: int = 0
    literal: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.c < 0:
            raise ValueError("c must be >= 0")


def bm_recursion(field) -> int:
    """``L_{n,n}`` of ``L[i,j] = max(L[i-1,j], L[i,j-1], L[i-1,j-1] + S[i,j])``, zero borders."""
    field = np.ascontiguousarray(np.asarray(field, dtype=np.int64))
    if field.ndim != 2 or field.shape[0] != field.shape[1]:
        raise NonSquare(f"score field must be square, got shape {field.shape}")
    return int(_kernels.field_recursion(field))


def bm_field(cfg: BmConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.mode == "dependent":
        k = cfg.alphabet
        x = rng.integers(0, k, size=cfg.n)
        y = rng.integers(0, k, size=cfg.n)
        return (x[:, None] == y[None, :]).astype(np.int64)
    return (rng.random((cfg.n, cfg.n)) < cfg.p).astype(np.int64)


@dataclass(frozen=True)
class BmStudy:
    n: int
    mode: str
    p: float
    replicates: int
    mean: float
    se: float
    skewness: float
    match_rate: float


def bm_study(cfg: BmConfig, replicates: int, workers: int | None = None) -> BmStudy:
    purpose = salt("bm", cfg.n, cfg.mode, cfg.p)

    def one(i: int) -> tuple[int, float]:
        field = bm_field(cfg, stream(cfg.seed, i, purpose))
        return bm_recursion(field), float(field.mean())

    out = map_replicates(one, replicates, workers)
    L = np.array([o[0] for o in out], dtype=np.float64)
    se = float(L.std(ddof=1) / math.sqrt(L.size)) if L.size > 1 else 0.0
    skew = float(stats.skew(L)) if L.size > 2 and L.std() > 0 else 0.0
    return BmStudy(cfg.n, cfg.mode, cfg.p, replicates, float(L.mean()), se, skew, float(np.mean([o[1] for o in out])))


# --- permutations ----------------------------------------------------------


def perm_window_model(n: int, c: float, literal: bool = False) -> ScoreModel:
    """Score on letters ``0..n-1`` stored at scale ``n - 1``.

    Default: ``(1 - |a-b|/(n-1)) * 1{|a-b| <= c}``.  ``literal=True`` gives
    ``1 - (|a-b|/(n-1)) * 1{|a-b| <= c}``, which is constant 1 at ``c = 0``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if n * n > MAX_TABLE_ENTRIES:
        raise ModelTooLarge(f"a {n} x {n} table exceeds {MAX_TABLE_ENTRIES} entries")
    gap = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    inside = gap <= c
    if literal:
        table = (n - 1) - gap * inside
    else:
        table = ((n - 1) - gap) * inside
    tag = ",formula=literal" if literal else ""
    return ScoreModel.from_table(table, n - 1, name=f"perm-window:n={n},c={c:g}{tag}")


def random_permutation_pair(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    return rng.permutation(n).astype(np.int64), rng.permutation(n).astype(np.int64)


def composition(pi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Position in ``pi`` of each value of ``rho``, in ``rho`` order (0-based)."""
    inv = np.empty_like(pi)
    inv[pi] = np.arange(pi.size)
    return inv[rho]


def perm_score_L(cfg: PermConfig, model: ScoreModel | None = None, index: int = 0) -> Fraction:
    """Optimal score of one permutation pair; replicate ``index`` of seed ``cfg.seed``."""
    model = model or perm_window_model(cfg.n, cfg.c, cfg.literal)
    pi, rho = random_permutation_pair(cfg.n, stream(cfg.seed, index, salt("perm", cfg.n)))
    raw = _kernels.pair_score(pi, rho, model.flat_table, model.k)
    return Fraction(int(raw), model.scale)


def perm_pair(cfg: PermConfig, index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """The pair ``(pi, rho)`` that :func:`perm_score_L` draws for replicate ``index``."""
    return random_permutation_pair(cfg.n, stream(cfg.seed, index, salt("perm", cfg.n)))


def lis_oracle(perm: Sequence[int]) -> int:
    """Longest strictly increasing subsequence by patience sorting."""
    values = [int(v) for v in perm]
    lo = min(values, default=0)
    if lo not in (0, 1) or sorted(values) != list(range(lo, lo + len(values))):
        raise NotPermutation("input is not a permutation of 0..n-1 or 1..n")
    tops: list[int] = []
    for v in values:
        i = bisect_left(tops, v)
        if i == len(tops):
            tops.append(v)
        else:
            tops[i] = v
    return len(tops)


@dataclass(frozen=True)
class PermStudy:
    n: int
    c: float
    replicates: int
    mean: float
    se: float
    mean_over_sqrt_n: float
    var: float
    skewness: float
    excess_kurtosis: float


def perm_study(cfg: PermConfig, replicates: int, workers: int | None = None) -> PermStudy:
    model = perm_window_model(cfg.n, cfg.c, cfg.literal)
    out = map_replicates(lambda i: perm_score_L(cfg, model, i), replicates, workers)
    L = np.array([float(v) for v in out])
    var = float(L.var(ddof=1)) if L.size > 1 else 0.0
    flat = L.size < 3 or L.std() == 0
    return PermStudy(
        cfg.n,
        cfg.c,
        replicates,
        float(L.mean()),
        math.sqrt(var / L.size),
        float(L.mean()) / math.sqrt(cfg.n),
        var,
        0.0 if flat else float(stats.skew(L)),
        0.0 if flat else float(stats.kurtosis(L)),
    )
