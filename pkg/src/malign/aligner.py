"""Optimal alignment scores on the m-dimensional lattice.

``L(i_1..i_m) = max(max_j L(.., i_j - 1, ..), L(i_1 - 1, .., i_m - 1) + S(x_{i_1}, .., x_{i_m}))``
with ``L = 0`` whenever some index is 0.  Heaviest strictly increasing paths
and alignments are the same thing because ``S >= 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .scoring import OutOfAlphabet, ScoreModel

SCORE_BUDGET = 200_000_000
PATH_BUDGET = 50_000_000
BRUTE_MAX_LEN = 8
BRUTE_MAX_M = 3


class AlignError(ValueError):
    pass


class BudgetExceeded(AlignError):
    pass


class ArityMismatch(AlignError):
    pass


class TooLarge(AlignError):
    pass


class EmptyBand(AlignError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    sequences: tuple[np.ndarray, ...]

    def __post_init__(self):
        seqs = tuple(np.ascontiguousarray(np.asarray(s, dtype=np.int64).reshape(-1)) for s in self.sequences)
        if len(seqs) < 2:
            raise ArityMismatch("an instance needs at least two sequences")
        for s in seqs:
            if s.size and s.min() < 0:
                raise OutOfAlphabet("symbols must be non-negative integers")
            s.setflags(write=False)
        object.__setattr__(self, "sequences", seqs)

    @classmethod
    def of(cls, *seqs: Sequence[int]) -> "Instance":
        return cls(tuple(seqs))

    @property
    def m(self) -> int:
        return len(self.sequences)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(int(s.size) for s in self.sequences)

    def cells(self) -> int:
        return math.prod(n + 1 for n in self.lengths)

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        lens = np.array(self.lengths, dtype=np.int64)
        out = np.zeros((self.m, max(1, int(lens.max()))), dtype=np.int64)
        for j, s in enumerate(self.sequences):
            out[j, : s.size] = s
        return out, lens

    def check(self, model: ScoreModel) -> None:
        if self.m != model.m:
            raise ArityMismatch(f"instance has {self.m} sequences, model arity is {model.m}")
        for s in self.sequences:
            if s.size and s.max() >= model.k:
                raise OutOfAlphabet(f"symbol {int(s.max())} outside alphabet of size {model.k}")

    def to_json(self) -> dict:
        return {"sequences": [s.tolist() for s in self.sequences]}

    @classmethod
    def from_json(cls, doc: dict) -> "Instance":
        return cls(tuple(doc["sequences"]))


@dataclass(frozen=True)
class AlignmentResult:
    score: int
    scale: int
    path: tuple[tuple[int, ...], ...] | None = None
    cells_visited: int = 0
    peak_memory_cells: int = 0

    @property
    def value(self) -> Fraction:
        return Fraction(self.score, self.scale)


def _check_budget(instance: Instance, budget: int) -> int:
    cells = instance.cells()
    if cells > budget:
        raise BudgetExceeded(f"{cells} lattice cells exceed the budget of {budget}")
    return cells


def align_exact(
    instance: Instance, model: ScoreModel, want_path: bool = False, budget: int | None = None
) -> AlignmentResult:
    """Exact optimal score; with ``want_path`` also the canonical optimal alignment."""
    instance.check(model)
    cells = _check_budget(instance, budget or (PATH_BUDGET if want_path else SCORE_BUDGET))
    if min(instance.lengths) == 0:
        return AlignmentResult(0, model.scale, () if want_path else None, cells, 0)
    table = model.flat_table
    slab = cells // (instance.lengths[0] + 1)
    if want_path:
        seqs, lens = instance.packed()
        score, moves = _kernels.lattice_moves(seqs, lens, table, model.k)
        path = backtrack_canonical(moves, instance)
        return AlignmentResult(int(score), model.scale, path, cells, 2 * slab + cells)
    if instance.m == 2:
        x, y = instance.sequences
        score = _kernels.pair_score(x, y, table, model.k)
        return AlignmentResult(int(score), model.scale, None, cells, y.size + 1)
    seqs, lens = instance.packed()
    score = _kernels.lattice_score(seqs, lens, table, model.k)
    return AlignmentResult(int(score), model.scale, None, cells, 2 * slab)


def solve_score(instance: Instance, model: ScoreModel) -> int:
    """Fixed-point optimal score, no path; the Monte Carlo hot path."""
    return align_exact(instance, model).score


def backtrack_canonical(moves: np.ndarray, instance: Instance) -> tuple[tuple[int, ...], ...]:
    """Deterministic walk back from ``(n_1..n_m)`` through the optimal-move table.

    Priority at every cell: the diagonal step when it is optimal and its tuple
    scores > 0 (emitting that tuple), otherwise a step back along the smallest
    axis whose step is optimal.  Zero-score diagonal steps are never taken.
    Indices in the returned tuples are 1-based.
    """
    _, lens = instance.packed()
    rows = _kernels.backtrack(moves, lens)
    return tuple(tuple(int(v) for v in row) for row in rows)


def path_score(instance: Instance, model: ScoreModel, path) -> int:
    total = 0
    for tup in path:
        total += int(model.table[tuple(int(instance.sequences[j][i - 1]) for j, i in enumerate(tup))])
    return total


def brute_force_score(instance: Instance, model: ScoreModel) -> int:
    """Max alignment score by enumerating every alignment (equal-length increasing index vectors)."""
    instance.check(model)
    lengths = instance.lengths
    if instance.m > BRUTE_MAX_M or max(lengths) > BRUTE_MAX_LEN:
        raise TooLarge(f"brute force is limited to m <= {BRUTE_MAX_M}, n_j <= {BRUTE_MAX_LEN}")
    best = 0
    m = instance.m
    for k in range(1, min(lengths) + 1):
        # letters picked by every increasing index vector of length k, per sequence
        picks = [
            np.array([s[list(c)] for c in itertools.combinations(range(s.size), k)], dtype=np.int64)
            for s in instance.sequences
        ]
        shaped = []
        for j, p in enumerate(picks):
            shape = [1] * m + [k]
            shape[j] = p.shape[0]
            shaped.append(p.reshape(shape))
        totals = model.table[tuple(shaped)].sum(axis=-1)
        best = max(best, int(totals.max()))
    return best


@dataclass(frozen=True)
class Band:
    """Affine envelopes ``lower_slope[j] x_1 - lower_offset[j] <= x_j <= upper_slope[j] x_1 + upper_offset[j]``.

    One entry per sequence ``j = 2..m`` (index 0 of each tuple refers to sequence 2).
    """

    lower_slope: tuple[float, ...]
    lower_offset: tuple[float, ...]
    upper_slope: tuple[float, ...]
    upper_offset: tuple[float, ...]

    @classmethod
    def diagonal(cls, p_lo: Sequence[float], p_hi: Sequence[float], n: int, eps: float, v: float) -> "Band":
        """The parallelepiped ``p_lo x_1 - p_lo (n eps + v) <= x_j <= p_hi x_1 + p_hi (n eps + v)``."""
        w = n * eps + v
        return cls(
            tuple(float(p) for p in p_lo),
            tuple(float(p) * w for p in p_lo),
            tuple(float(p) for p in p_hi),
            tuple(float(p) * w for p in p_hi),
        )

    @classmethod
    def full(cls, instance: Instance) -> "Band":
        big = float(max(instance.lengths) + 1)
        r = instance.m - 1
        return cls((0.0,) * r, (big,) * r, (0.0,) * r, (big,) * r)

    def bounds(self, lengths: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Integer row bounds ``lo[j, x_1], hi[j, x_1]`` clipped to the lattice."""
        m = len(lengths)
        if len(self.lower_slope) != m - 1:
            raise ArityMismatch(f"band covers {len(self.lower_slope) + 1} sequences, instance has {m}")
        n1 = lengths[0]
        x1 = np.arange(n1 + 1, dtype=np.float64)
        lo = np.zeros((m, n1 + 1), dtype=np.int64)
        hi = np.zeros((m, n1 + 1), dtype=np.int64)
        for j in range(1, m):
            lower = self.lower_slope[j - 1] * x1 - self.lower_offset[j - 1]
            upper = self.upper_slope[j - 1] * x1 + self.upper_offset[j - 1]
            if (lower > upper + 1e-9).any():
                raise EmptyBand(f"lower envelope exceeds upper envelope for sequence {j + 1}")
            lo[j] = np.clip(np.ceil(lower - 1e-9), 0, lengths[j] + 1).astype(np.int64)
            hi[j] = np.clip(np.floor(upper + 1e-9), -1, lengths[j]).astype(np.int64)
        return lo, hi


def align_banded(instance: Instance, model: ScoreModel, band: Band) -> tuple[AlignmentResult, bool]:
    """Recursion restricted to lattice cells inside ``band``.

    The returned score is the best alignment realisable by a walk that stays in
    the band, hence a lower bound on the exact score.  The certificate compares
    it with an upper bound on every walk that leaves the band (best in-band
    prefix to the exit point, plus the exiting step, plus ``s*`` for each tuple
    still possible afterwards); when the bound does not exceed the in-band
    score, the score is exact.
    """
    instance.check(model)
    lengths = instance.lengths
    lo, hi = band.bounds(lengths)
    n1 = lengths[0]
    for j in range(1, instance.m):
        if not (lo[j, 0] <= 0 <= hi[j, 0]):
            raise EmptyBand("the origin lies outside the band")
        if not (lo[j, n1] <= lengths[j] <= hi[j, n1]):
            raise EmptyBand("the far corner lies outside the band")
    table = model.flat_table
    if instance.m == 2:
        x, y = instance.sequences
        final, exit_ub, cells = _kernels.pair_banded(x, y, table, model.k, lo[1], hi[1], model.s_star)
        peak = 2 * (y.size + 1)
    else:
        seqs, lens = instance.packed()
        final, exit_ub, cells = _kernels.lattice_banded(seqs, lens, table, model.k, lo, hi, model.s_star)
        peak = 2 * (instance.cells() // (n1 + 1))
    if final == _kernels.NEG:
        raise EmptyBand("no in-band walk reaches the far corner")
    certified = bool(exit_ub <= final)
    return AlignmentResult(int(final), model.scale, None, int(cells), peak), certified
