"""Monte Carlo estimators for optimal alignment scores of random words.

Every replicate draws its words from its own counter-based stream (see
:mod:`malign.rng`), and aggregates are reduced in replicate order, so a report
depends only on its configuration and seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import _kernels
from .aligner import SCORE_BUDGET, BudgetExceeded, Instance, align_exact
from .blocks import DiagonalConfig, block_length, check_D_event, check_E_event, decompose_cells, epsilon_schedule
from .rng import draw_words, map_replicates, salt, stream
from .scoring import ScoreModel, SequenceDistribution

DKW_ALPHA = 0.05


class DegenerateVariance(ValueError):
    pass


class BadSimplexPoint(ValueError):
    pass


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    replicates: int = 1000
    n_grid: tuple[int, ...] = ()
    workers: int | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))


@dataclass(frozen=True)
class GammaEstimate:
    n: int
    lengths: tuple[int, ...]
    mean_L: float
    se: float
    var: float
    gamma: float
    replicates: int
    q: tuple[float, ...] | None = None


def sample_L(model: ScoreModel, dist: SequenceDistribution, lengths: Sequence[int], rng: np.random.Generator) -> int:
    """Fixed-point optimal score of one draw of independent i.i.d. words."""
    words = draw_words(dist.probs, lengths, rng)
    if model.m == 2:
        return int(_kernels.pair_score(words[0], words[1], model.flat_table, model.k))
    return align_exact(Instance(words), model).score


def replicate_scores(
    model: ScoreModel,
    dist: SequenceDistribution,
    lengths: Sequence[int],
    seed: int,
    replicates: int,
    purpose: int,
    workers: int | None = None,
) -> np.ndarray:
    """Fixed-point scores of ``replicates`` independent draws, in replicate order."""
    dist.check_model(model)
    lengths = tuple(int(n) for n in lengths)
    if len(lengths) != model.m:
        raise ValueError(f"need {model.m} lengths, got {len(lengths)}")
    cells = math.prod(n + 1 for n in lengths)
    if cells > SCORE_BUDGET:
        raise BudgetExceeded(f"{cells} lattice cells per replicate exceed the budget of {SCORE_BUDGET}")

    def one(i: int) -> int:
        return sample_L(model, dist, lengths, stream(seed, i, purpose))

    return np.array(map_replicates(one, replicates, workers), dtype=np.int64)


def _summarize(scores: np.ndarray, scale: int) -> tuple[float, float, float]:
    x = scores.astype(np.float64) / scale
    mean = float(x.mean())
    var = float(x.var(ddof=1)) if x.size > 1 else 0.0
    return mean, var, math.sqrt(var / x.size)


def _estimate(model, dist, n, lengths, cfg: McConfig, purpose: int, q=None) -> GammaEstimate:
    scores = replicate_scores(model, dist, lengths, cfg.seed, cfg.replicates, purpose, cfg.workers)
    mean, var, se = _summarize(scores, model.scale)
    return GammaEstimate(n, tuple(lengths), mean, se, var, mean / n, cfg.replicates, q)


@dataclass
class GammaCurve:
    estimates: list[GammaEstimate]
    superadditivity: list[dict] = field(default_factory=list)
    fit: dict | None = None


def estimate_gamma_curve(model: ScoreModel, dist: SequenceDistribution, cfg: McConfig) -> GammaCurve:
    """Mean score per length on ``cfg.n_grid`` with a doubling audit and a rate fit.

    The audit checks ``E L_{2n} >= 2 E L_n - 3 * pooled SE`` for every pair
    ``(n, 2n)`` in the grid.  The fit is ``gamma_n = gamma* - c * sqrt(ln n / n)``.
    """
    ests = [_estimate(model, dist, n, (n,) * model.m, cfg, salt("gamma", n)) for n in cfg.n_grid]
    by_n = {e.n: e for e in ests}
    audit = []
    for e in ests:
        twice = by_n.get(2 * e.n)
        if twice is None:
            continue
        pooled = math.sqrt(twice.se**2 + 4 * e.se**2)
        audit.append(
            {
                "n": e.n,
                "mean_n": e.mean_L,
                "mean_2n": twice.mean_L,
                "pooled_se": pooled,
                "holds": twice.mean_L >= 2 * e.mean_L - 3 * pooled,
            }
        )
    return GammaCurve(ests, audit, fit_rate(ests))


def fit_rate(ests: Sequence[GammaEstimate]) -> dict | None:
    pts = [e for e in ests if e.n >= 2]
    if len({e.n for e in pts}) < 2:
        return None
    h = np.array([math.sqrt(math.log(e.n) / e.n) for e in pts])
    g = np.array([e.gamma for e in pts])
    se = np.array([e.se / e.n for e in pts])
    w = 1.0 / se if (se > 0).all() else np.ones_like(se)
    design = np.column_stack([np.ones_like(h), -h])
    coef, *_ = np.linalg.lstsq(design * w[:, None], g * w, rcond=None)
    return {"gamma_star": float(coef[0]), "c": float(coef[1])}


# --- relative lengths ------------------------------------------------------


def surface_lengths(n: int, q: Sequence[float]) -> tuple[int, ...]:
    # n * q is rounded up; the 1e-9 keeps 100 * 0.2 from rounding up to 21
    return tuple(max(1, math.ceil(n * qj - 1e-9)) for qj in q)


def default_q_grid(m: int = 2, points: int = 9, lo: float = 0.2, hi: float = 1.8) -> list[tuple[float, ...]]:
    if m != 2:
        raise ValueError("the default grid is defined for m = 2; pass q points explicitly")
    return [(round(a, 12), round(2.0 - a, 12)) for a in np.linspace(lo, hi, points)]


def _check_simplex(q: Sequence[float], m: int) -> tuple[float, ...]:
    q = tuple(float(x) for x in q)
    if len(q) != m or any(x <= 0 for x in q) or abs(sum(q) - m) > 1e-9:
        raise BadSimplexPoint(f"{q} is not a point with positive coordinates summing to {m}")
    return q


@dataclass
class SurfaceReport:
    n: int
    estimates: list[GammaEstimate]
    center: tuple[float, ...]
    max_at_center: bool
    concavity: list[dict]
    symmetry: list[dict]

    @property
    def concave(self) -> bool:
        return all(c["holds"] for c in self.concavity)

    @property
    def symmetric(self) -> bool:
        return all(c["holds"] for c in self.symmetry)


def estimate_gamma_surface(
    model: ScoreModel, dist: SequenceDistribution, n: int, q_grid: Sequence[Sequence[float]], cfg: McConfig
) -> SurfaceReport:
    """``E L(n q_1, .., n q_m) / n`` over a grid of relative lengths, with shape audits.

    Audits, all at 3 standard errors of the compared combination: the grid
    maximum sits at the point nearest ``(1, .., 1)``; every grid midpoint of two
    grid points is at least the average of its ends; coordinate-permuted points
    agree.
    """
    grid = [_check_simplex(q, model.m) for q in q_grid]
    ests = [
        _estimate(model, dist, n, surface_lengths(n, q), cfg, salt("surface", n, q), q=q) for q in grid
    ]
    if not ests:
        return SurfaceReport(n, [], (), True, [], [])
    ones = np.ones(model.m)
    center_idx = int(np.argmin([np.linalg.norm(np.asarray(q) - ones) for q in grid]))
    c = ests[center_idx]
    top = max(ests, key=lambda e: e.gamma)
    max_ok = c.gamma >= top.gamma - 3 * math.hypot(c.se, top.se) / n

    def find(q) -> int | None:
        for i, r in enumerate(grid):
            if max(abs(a - b) for a, b in zip(q, r)) < 1e-9:
                return i
        return None

    concavity = []
    for i, j in itertools.combinations(range(len(grid)), 2):
        mid = tuple((a + b) / 2 for a, b in zip(grid[i], grid[j]))
        k = find(mid)
        if k is None or k in (i, j):
            continue
        a, b, mm = ests[i], ests[j], ests[k]
        tol = 3 * math.sqrt(mm.se**2 + (a.se**2 + b.se**2) / 4) / n
        concavity.append(
            {
                "q": grid[i],
                "r": grid[j],
                "mid": grid[k],
                "gap": mm.gamma - (a.gamma + b.gamma) / 2,
                "tolerance": tol,
                "holds": mm.gamma >= (a.gamma + b.gamma) / 2 - tol,
            }
        )
    symmetry = []
    for i, q in enumerate(grid):
        for perm in set(itertools.permutations(q)):
            k = find(perm)
            if k is None or k <= i:
                continue
            tol = 3 * math.hypot(ests[i].se, ests[k].se) / n
            symmetry.append(
                {"q": q, "swapped": grid[k], "diff": ests[i].gamma - ests[k].gamma, "holds": abs(ests[i].gamma - ests[k].gamma) <= tol}
            )
    return SurfaceReport(n, ests, grid[center_idx], bool(max_ok), concavity, symmetry)


# --- concentration ---------------------------------------------------------


@dataclass
class HoeffdingReport:
    n: int
    mean_L: float
    replicates: int
    rows: list[dict]

    @property
    def violations(self) -> int:
        return sum(r["flag_upper"] + r["flag_lower"] for r in self.rows)


def hoeffding_bound(model: ScoreModel, n: int, t: float) -> float:
    """``exp(-2 t^2 / (n * sum_j D_j^2))`` with ``D_j`` in score units."""
    dsq = sum((d / model.scale) ** 2 for d in model.d_coords)
    return math.exp(-2.0 * t * t / (n * dsq))


def hoeffding_audit(
    model: ScoreModel,
    dist: SequenceDistribution,
    n: int,
    t_grid: Sequence[float],
    cfg: McConfig,
    confidence: float = 0.99,
) -> HoeffdingReport:
    """Empirical two-sided tail frequencies of ``L - mean`` against the martingale bound.

    A tail is flagged when observing at least that many exceedances would have
    probability below ``1 - confidence`` if the true tail equalled the bound.
    """
    if any(t <= 0 for t in t_grid):
        raise ValueError("t values must be positive")
    scores = replicate_scores(model, dist, (n,) * model.m, cfg.seed, cfg.replicates, salt("hoeffding", n), cfg.workers)
    x = scores.astype(np.float64) / model.scale
    mean = float(x.mean())
    dev = x - mean
    R = x.size
    rows = []
    for t in t_grid:
        bound = hoeffding_bound(model, n, t)
        up = int((dev >= t).sum())
        lo = int((dev <= -t).sum())
        # P(Binomial(R, bound) >= count)
        p_up = float(stats.binom.sf(up - 1, R, bound)) if up else 1.0
        p_lo = float(stats.binom.sf(lo - 1, R, bound)) if lo else 1.0
        rows.append(
            {
                "t": float(t),
                "bound": bound,
                "freq_upper": up / R,
                "freq_lower": lo / R,
                "flag_upper": p_up < 1.0 - confidence,
                "flag_lower": p_lo < 1.0 - confidence,
            }
        )
    return HoeffdingReport(n, mean, R, rows)


# --- normal approximation --------------------------------------------------


def normal_cdf(x: float) -> float:
    """Standard normal CDF through the complementary error function, clamped to [0, 1]."""
    if math.isnan(x):
        raise ValueError("normal_cdf of NaN")
    return min(1.0, max(0.0, 0.5 * math.erfc(-x / math.sqrt(2.0))))


def dkw_band(n_samples: int, alpha: float = DKW_ALPHA) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples))


def standardize(values: Sequence[float]) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two samples")
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise DegenerateVariance("sample standard deviation is zero")
    return (x - x.mean()) / sd


def empirical_dk(samples: Sequence[float]) -> tuple[float, float]:
    """Kolmogorov distance between the empirical law of ``samples`` and the standard normal.

    ``samples`` are expected to be standardized already (see :func:`standardize`).
    Returns the distance and the 95% DKW half-width.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    N = x.size
    if N < 2:
        raise ValueError("need at least two samples")
    if x[0] == x[-1]:
        raise DegenerateVariance("all samples are equal")
    phi = np.array([normal_cdf(v) for v in x])
    i = np.arange(1, N + 1)
    dk = float(np.max(np.maximum(np.abs(i / N - phi), np.abs((i - 1) / N - phi))))
    return dk, dkw_band(N)


@dataclass(frozen=True)
class CltReport:
    n: int
    replicates: int
    mean_L: float | None = None
    var_hat: float | None = None
    var_per_n: float | None = None
    dk_hat: float | None = None
    dk_band: float | None = None
    skewness: float | None = None
    excess_kurtosis: float | None = None
    c_star_check: bool | None = None
    error: str | None = None


@dataclass
class CltStudy:
    rows: list[CltReport]
    dk_nonincreasing: bool
    var_per_n_changes: list[float]
    var_per_n_stable: bool


def clt_row(model, dist, n: int, cfg: McConfig, c_star: float | None = None) -> CltReport:
    scores = replicate_scores(model, dist, (n,) * model.m, cfg.seed, cfg.replicates, salt("clt", n), cfg.workers)
    x = scores.astype(np.float64) / model.scale
    try:
        z = standardize(x)
    except DegenerateVariance:
        return CltReport(n, x.size, mean_L=float(x.mean()), var_hat=0.0, var_per_n=0.0, error="DegenerateVariance")
    dk, band = empirical_dk(z)
    var = float(x.var(ddof=1))
    return CltReport(
        n,
        x.size,
        mean_L=float(x.mean()),
        var_hat=var,
        var_per_n=var / n,
        dk_hat=dk,
        dk_band=band,
        skewness=float(stats.skew(x)),
        excess_kurtosis=float(stats.kurtosis(x)),
        c_star_check=None if c_star is None else var >= c_star * n,
    )


def clt_report(
    model: ScoreModel,
    dist: SequenceDistribution,
    n_grid: Sequence[int],
    cfg: McConfig,
    c_star: float | None = None,
    stable_tol: float = 0.25,
) -> CltStudy:
    """Variance growth and Kolmogorov distance to the normal law along ``n_grid``.

    ``dk_nonincreasing``: each distance is at most the previous one plus both
    DKW half-widths.  ``var_per_n_stable``: the last relative change of
    ``Var / n`` is within ``stable_tol``.
    """
    rows = [clt_row(model, dist, n, cfg, c_star) for n in n_grid]
    ok = [r for r in rows if r.error is None]
    mono = all(b.dk_hat <= a.dk_hat + a.dk_band + b.dk_band for a, b in zip(ok, ok[1:]))
    changes = [abs(b.var_per_n - a.var_per_n) / a.var_per_n for a, b in zip(ok, ok[1:])]
    stable = bool(changes) and changes[-1] <= stable_tol
    return CltStudy(rows, bool(mono), changes, stable)


# --- diagonal closeness ----------------------------------------------------


@dataclass
class DiagonalAudit:
    n: int
    n_eff: int
    v: int
    epsilon: float
    seeds: int
    e_holds: int
    d_holds: int
    d_given_e: int
    good_fractions: list[float]

    @property
    def e_rate(self) -> float:
        return self.e_holds / self.seeds

    @property
    def inclusion_rate(self) -> float:
        return self.d_given_e / self.e_holds if self.e_holds else 1.0


def diagonal_audit(
    model: ScoreModel,
    dist: SequenceDistribution,
    n: int,
    alpha: float,
    c1: float,
    p_lo: float,
    p_hi: float,
    seeds: int,
    seed: int = 0,
    workers: int | None = None,
) -> DiagonalAudit:
    """Frequency of the canonical-alignment E event, and of D on the draws where E holds.

    Block length ``v = floor(n^alpha)``; the words are truncated to a multiple of ``v``.
    """
    v, n_eff = block_length(n, alpha)
    eps = epsilon_schedule(n_eff, alpha, c1)
    cfg = DiagonalConfig.uniform(model.m, p_lo, p_hi, eps, alpha=alpha, c1=c1)
    purpose = salt("diag", n, alpha)

    def one(i: int) -> tuple[bool, bool, float]:
        words = draw_words(dist.probs, (n_eff,) * model.m, stream(seed, i, purpose))
        res = align_exact(Instance(words), model, want_path=True)
        decomp = decompose_cells(res.path, (n_eff,) * model.m, v)
        e, frac = check_E_event(decomp, cfg)
        return e, check_D_event(res.path, n_eff, cfg, v), frac

    out = map_replicates(one, seeds, workers)
    e_holds = sum(e for e, _, _ in out)
    return DiagonalAudit(
        n,
        n_eff,
        v,
        eps,
        seeds,
        e_holds,
        sum(d for _, d, _ in out),
        sum(e and d for e, d, _ in out),
        [f for _, _, f in out],
    )
