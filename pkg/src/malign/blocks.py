"""Cells of an optimal alignment and the diagonal-closeness events.

Sequence 1 is cut into ``d = n / v`` blocks of length ``v``.  For every other
sequence ``j`` the breakpoint ``r_k`` is the largest index of sequence ``j``
aligned (by the canonical path) to a position ``<= v k`` of sequence 1, carried
forward over blocks that align nothing, with ``r_0 = 0`` and ``r_d = n_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aligner import Instance, align_exact
from .scoring import ScoreModel


class NotDivisible(ValueError):
    pass


class NotOptimalPath(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    v: int
    d: int
    breakpoints: np.ndarray  # shape (m, d + 1); row 0 is v * k
    lengths: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.breakpoints.shape[0]

    def widths(self) -> np.ndarray:
        """``r_k - r_{k-1}`` per sequence and cell, shape ``(m, d)``."""
        return np.diff(self.breakpoints, axis=1)

    def cell(self, k: int) -> tuple[slice, ...]:
        """0-based half-open slices of cell ``k`` (``k`` runs 1..d)."""
        if not 1 <= k <= self.d:
            raise IndexError(f"cell index {k} outside 1..{self.d}")
        return tuple(slice(int(self.breakpoints[j, k - 1]), int(self.breakpoints[j, k])) for j in range(self.m))

    def cells(self) -> list[tuple[slice, ...]]:
        return [self.cell(k) for k in range(1, self.d + 1)]

    def cell_letters(self, instance: Instance, k: int) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(a) for a in s[sl]) for s, sl in zip(instance.sequences, self.cell(k)))

    def cell_of(self, flat_index: int) -> int:
        """Cell (1..d) holding letter ``flat_index`` of the sequence-major concatenation."""
        offset = 0
        for j, n in enumerate(self.lengths):
            if flat_index < offset + n:
                pos = flat_index - offset
                return int(np.searchsorted(self.breakpoints[j], pos, side="right"))
            offset += n
        raise IndexError(f"letter index {flat_index} outside the {offset} letters")

    def cell_scores(self, instance: Instance, model: ScoreModel) -> list[int]:
        out = []
        for k in range(1, self.d + 1):
            sl = self.cell(k)
            sub = Instance(tuple(s[c] for s, c in zip(instance.sequences, sl)))
            out.append(align_exact(sub, model).score)
        return out

    @classmethod
    def from_breakpoints(cls, v: int, breakpoints: Sequence[Sequence[int]], lengths: Sequence[int]) -> "BlockDecomposition":
        """Build from explicit breakpoint vectors for sequences 2..m (each ``r_0 .. r_d``)."""
        lengths = tuple(int(n) for n in lengths)
        if lengths[0] % v:
            raise NotDivisible(f"block length {v} does not divide n = {lengths[0]}")
        d = lengths[0] // v
        rows = [np.arange(d + 1, dtype=np.int64) * v]
        for j, r in enumerate(breakpoints, start=1):
            r = np.asarray(r, dtype=np.int64)
            if r.shape != (d + 1,) or r[0] != 0 or r[-1] != lengths[j] or (np.diff(r) < 0).any():
                raise ValueError(f"breakpoints for sequence {j + 1} must run monotonically from 0 to {lengths[j]}")
            rows.append(r)
        bp = np.vstack(rows)
        bp.setflags(write=False)
        return cls(v, d, bp, lengths)


def decompose_cells(
    path: Sequence[Sequence[int]],
    lengths: Sequence[int],
    v: int,
    instance: Instance | None = None,
    model: ScoreModel | None = None,
) -> BlockDecomposition:
    """Cells of ``path`` (1-based aligned tuples) at block length ``v``.

    When ``instance`` and ``model`` are given, re-solves every cell and checks
    that the cell optima add up to the path score.
    """
    lengths = tuple(int(n) for n in lengths)
    n1 = lengths[0]
    if v < 1 or n1 % v:
        raise NotDivisible(f"block length {v} does not divide n = {n1}")
    d = n1 // v
    m = len(lengths)
    bp = np.zeros((m, d + 1), dtype=np.int64)
    bp[0] = np.arange(d + 1) * v
    last = [0] * m
    it = iter(path)
    tup = next(it, None)
    for k in range(1, d + 1):
        while tup is not None and tup[0] <= v * k:
            last = list(tup)
            tup = next(it, None)
        for j in range(1, m):
            bp[j, k] = last[j]
    bp[1:, d] = lengths[1:]
    bp.setflags(write=False)
    decomp = BlockDecomposition(v, d, bp, lengths)
    if instance is not None and model is not None:
        from .aligner import path_score

        total = sum(decomp.cell_scores(instance, model))
        if total != path_score(instance, model, path):
            raise NotOptimalPath("cell optima do not add up to the path score")
    return decomp


@dataclass(frozen=True)
class DiagonalConfig:
    p_lo: tuple[float, ...]
    p_hi: tuple[float, ...]
    epsilon: float
    eta: float = 0.0
    alpha: float = 0.5
    c1: float = 1.0
    delta_star: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p_lo", tuple(float(p) for p in self.p_lo))
        object.__setattr__(self, "p_hi", tuple(float(p) for p in self.p_hi))
        if len(self.p_lo) != len(self.p_hi):
            raise ValueError("p_lo and p_hi need one entry per sequence 2..m")
        for a, b in zip(self.p_lo, self.p_hi):
            if not 0 < a < 1 < b:
                raise ValueError(f"need 0 < p_lo < 1 < p_hi, got ({a}, {b})")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @classmethod
    def uniform(cls, m: int, p_lo: float, p_hi: float, epsilon: float, **kw) -> "DiagonalConfig":
        return cls((p_lo,) * (m - 1), (p_hi,) * (m - 1), epsilon, **kw)


def check_E_event(decomp: BlockDecomposition, cfg: DiagonalConfig) -> tuple[bool, float]:
    """Share of cells whose widths all lie in ``[v p_lo_j, v p_hi_j]``; holds when >= 1 - eps.

    Evaluated for the given (canonical) decomposition only.
    """
    if len(cfg.p_lo) != decomp.m - 1:
        raise ValueError(f"config covers {len(cfg.p_lo) + 1} sequences, decomposition has {decomp.m}")
    widths = decomp.widths()[1:]
    lo = decomp.v * np.asarray(cfg.p_lo)[:, None]
    hi = decomp.v * np.asarray(cfg.p_hi)[:, None]
    good = ((widths >= lo) & (widths <= hi)).all(axis=0)
    fraction = float(good.sum()) / decomp.d
    return fraction >= 1.0 - cfg.epsilon, fraction


def check_D_event(path: Sequence[Sequence[int]], n: int, cfg: DiagonalConfig, v: int) -> bool:
    """Every aligned tuple lies in the parallelepiped around the main diagonal."""
    if not len(path):
        return True
    pts = np.asarray(path, dtype=np.float64)
    if pts.shape[1] - 1 != len(cfg.p_lo):
        raise ValueError("config and path disagree on the number of sequences")
    x1 = pts[:, :1]
    w = n * cfg.epsilon + v
    lo = np.asarray(cfg.p_lo) * (x1 - w)
    hi = np.asarray(cfg.p_hi) * (x1 + w)
    rest = pts[:, 1:]
    return bool(((rest >= lo) & (rest <= hi)).all())


def epsilon_schedule(n: float, alpha: float, c1: float) -> float:
    """``c1 * sqrt((1 + ln(n^alpha + 1)) / n^alpha)``, paired with block length ``v = n^alpha``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if c1 <= 0:
        raise ValueError(f"c1 must be positive, got {c1}")
    na = float(n) ** alpha
    return c1 * math.sqrt((1.0 + math.log(na + 1.0)) / na)


def block_length(n: int, alpha: float) -> tuple[int, int]:
    """``(v, n_eff)`` with ``v = floor(n^alpha)`` and ``n_eff = v * floor(n / v)``."""
    v = max(1, int(math.floor(n**alpha + 1e-12)))
    return v, v * (n // v)
