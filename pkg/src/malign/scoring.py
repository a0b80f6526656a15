"""Alphabets, permutation-invariant score functions and per-sequence letter laws.

Scores are stored as fixed-point integers: a rational score ``p/q`` lives in
the table as ``p/q * scale``.  Every comparison made by the aligner is then an
exact integer comparison, which keeps optimal paths and tie-breaking
deterministic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_SCALE = 1 << 16
MAX_TABLE_ENTRIES = 1 << 24
PROB_TOL = 2.0**-32


class ScoreModelError(ValueError):
    """Base class for invalid score models."""


class NonSymmetric(ScoreModelError):
    pass


class NegativeScore(ScoreModelError):
    pass


class TrivialScore(ScoreModelError):
    pass


class ScaleOverflow(ScoreModelError):
    pass


class OutOfAlphabet(ScoreModelError):
    pass


class ModelTooLarge(ScoreModelError):
    pass


class BadDistribution(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")

    @property
    def symbols(self) -> tuple[int, ...]:
        return tuple(range(self.size))

    def __contains__(self, symbol) -> bool:
        return isinstance(symbol, (int, np.integer)) and 0 <= symbol < self.size


@dataclass(frozen=True, eq=False)
class ScoreModel:
    """Validated score function on ``A^m``.

    ``table`` is a dense int64 array of shape ``(k,) * m``; ``s_star`` and
    ``d_coords`` are in fixed-point units.  Construct through
    :func:`build_score_model` or :meth:`from_table`, which run the checks.
    """

    alphabet: Alphabet
    m: int
    table: np.ndarray
    scale: int
    s_star: int
    d_coords: tuple[int, ...]
    name: str = ""

    @property
    def k(self) -> int:
        return self.alphabet.size

    @property
    def d_max(self) -> int:
        return max(self.d_coords)

    @property
    def flat_table(self) -> np.ndarray:
        return self.table.reshape(-1)

    def to_units(self, value: int) -> Fraction:
        return Fraction(int(value), self.scale)

    @classmethod
    def from_table(cls, table, scale: int, name: str = "") -> "ScoreModel":
        """Validate a dense fixed-point table and derive ``s*`` and the ``D_j``."""
        table = np.ascontiguousarray(np.asarray(table, dtype=np.int64))
        m = table.ndim
        if m < 2:
            raise ValueError("score table needs at least two axes (m >= 2)")
        k = table.shape[0]
        if any(s != k for s in table.shape):
            raise ValueError(f"score table must be cubic, got shape {table.shape}")
        if table.size > MAX_TABLE_ENTRIES:
            raise ModelTooLarge(f"|A|^m = {table.size} exceeds {MAX_TABLE_ENTRIES}")
        if scale < 1:
            raise ScaleOverflow(f"scale must be a positive integer, got {scale}")
        if (table < 0).any():
            raise NegativeScore("score function must be non-negative")
        if not (table > 0).any():
            raise TrivialScore("score function is identically zero")
        for perm in itertools.permutations(range(m)):
            if not np.array_equal(table, np.transpose(table, perm)):
                raise NonSymmetric(f"table is not invariant under axis permutation {perm}")
        s_star = int(table.max())
        d_coords = tuple(bounded_differences(table))
        if len(set(d_coords)) != 1:
            # unreachable for a symmetric table; kept as a hard check
            raise NonSymmetric(f"per-coordinate differences disagree: {d_coords}")
        table.setflags(write=False)
        return cls(Alphabet(k), m, table, int(scale), s_star, d_coords, name)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "alphabet": self.k,
            "m": self.m,
            "scale": self.scale,
            "s_star": str(self.to_units(self.s_star)),
            "d_coords": [str(self.to_units(d)) for d in self.d_coords],
        }


def bounded_differences(table: np.ndarray) -> list[int]:
    """``D_j`` = max |S(x) - S(y)| over tuples differing only in coordinate ``j``.

    For a fixed value of the other coordinates, the largest change along axis
    ``j`` is the max minus the min along that axis.
    """
    return [int((table.max(axis=j) - table.min(axis=j)).max()) for j in range(table.ndim)]


def _fixed(value, scale: int) -> int:
    value = Fraction(value)
    scaled = value * scale
    if scaled.denominator != 1:
        raise ScaleOverflow(f"score {value} is not representable at scale {scale}")
    if abs(scaled.numerator) >= 1 << 62:
        raise ScaleOverflow(f"score {value} overflows int64 at scale {scale}")
    return scaled.numerator


def build_score_model(
    alphabet: Alphabet,
    m: int,
    entries: Iterable[tuple[Sequence[int], object]],
    scale: int = DEFAULT_SCALE,
    name: str = "",
) -> ScoreModel:
    """Build a model from a generating set of ``(tuple, score)`` entries.

    Each tuple is expanded to its whole permutation orbit; unspecified tuples
    score 0.  Scores may be anything :class:`fractions.Fraction` accepts.
    """
    if m < 2:
        raise ValueError(f"arity must be >= 2, got {m}")
    if scale < 1 or scale & (scale - 1):
        raise ScaleOverflow(f"scale must be a power of two, got {scale}")
    if alphabet.size**m > MAX_TABLE_ENTRIES:
        raise ModelTooLarge(f"|A|^m = {alphabet.size ** m} exceeds {MAX_TABLE_ENTRIES}")
    table = np.zeros((alphabet.size,) * m, dtype=np.int64)
    assigned: dict[tuple[int, ...], Fraction] = {}
    for tup, score in entries:
        tup = tuple(int(s) for s in tup)
        if len(tup) != m:
            raise ValueError(f"tuple {tup} does not have arity {m}")
        for s in tup:
            if s not in alphabet:
                raise OutOfAlphabet(f"symbol {s} outside alphabet of size {alphabet.size}")
        score = Fraction(score)
        if score < 0:
            raise NegativeScore(f"negative score {score} for {tup}")
        key = tuple(sorted(tup))
        if key in assigned and assigned[key] != score:
            raise NonSymmetric(f"conflicting scores {assigned[key]} and {score} for orbit of {key}")
        assigned[key] = score
        fixed = _fixed(score, scale)
        for perm in set(itertools.permutations(tup)):
            table[perm] = fixed
    return ScoreModel.from_table(table, scale, name=name)


def score_lookup(model: ScoreModel, tup: Sequence[int]) -> int:
    if len(tup) != model.m:
        raise ValueError(f"expected {model.m} symbols, got {len(tup)}")
    for s in tup:
        if s not in model.alphabet:
            raise OutOfAlphabet(f"symbol {s} outside alphabet of size {model.k}")
    return int(model.table[tuple(int(s) for s in tup)])


def lcs_indicator(k: int = 2, m: int = 2, scale: int = DEFAULT_SCALE) -> ScoreModel:
    """``S(x_1..x_m) = 1`` iff all letters agree: the optimal score is the LCS length."""
    return build_score_model(
        Alphabet(k), m, [((a,) * m, 1) for a in range(k)], scale=scale, name=f"lcs-indicator:k={k},m={m}"
    )


@dataclass(frozen=True, eq=False)
class SequenceDistribution:
    """Letter law per sequence; rows may differ across sequences."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        if p.ndim != 2:
            raise BadDistribution("probs must be an (m, k) array")
        if (p < 0).any():
            raise BadDistribution("probabilities must be non-negative")
        if (np.abs(p.sum(axis=1) - 1.0) > PROB_TOL).any():
            raise BadDistribution(f"rows must sum to 1 within 2^-32: {p.sum(axis=1)}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def m(self) -> int:
        return self.probs.shape[0]

    @property
    def k(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, k: int, m: int) -> "SequenceDistribution":
        return cls(np.full((m, k), 1.0 / k))

    @classmethod
    def iid(cls, p: Sequence[float], m: int) -> "SequenceDistribution":
        return cls(np.tile(np.asarray(p, dtype=np.float64), (m, 1)))

    def is_degenerate(self) -> bool:
        """True when every sequence is almost surely a fixed word."""
        return bool((self.probs.max(axis=1) == 1.0).all())

    def check_model(self, model: ScoreModel) -> None:
        if self.m != model.m or self.k != model.k:
            raise BadDistribution(
                f"distribution is ({self.m} sequences, {self.k} letters); model is ({model.m}, {model.k})"
            )

    def to_json(self) -> dict:
        return {"alphabet": self.k, "probs": self.probs.tolist()}


# --- JSON documents ---------------------------------------------------------


def model_from_json(doc: dict) -> ScoreModel:
    k = int(doc["alphabet"])
    m = int(doc["m"])
    scale = int(doc.get("scale", DEFAULT_SCALE))
    entries = []
    for e in doc["entries"]:
        entries.append((e["tuple"], Fraction(int(e["num"]), int(e.get("den", 1)))))
    return build_score_model(Alphabet(k), m, entries, scale=scale, name=doc.get("name", ""))


def model_to_json(model: ScoreModel) -> dict:
    """Generating-set form: one entry per sorted orbit representative with a non-zero score."""
    entries = []
    for tup in itertools.combinations_with_replacement(range(model.k), model.m):
        v = int(model.table[tup])
        if v:
            frac = model.to_units(v)
            entries.append({"tuple": list(tup), "num": frac.numerator, "den": frac.denominator})
    return {"alphabet": model.k, "m": model.m, "scale": model.scale, "entries": entries}


def _parse_params(spec: str) -> tuple[str, dict[str, str]]:
    name, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            params[key.strip()] = value.strip()
    return name, params


def load_model(spec: str) -> ScoreModel:
    """Resolve a built-in name (``lcs-indicator:k=3,m=3``, ``perm-window:n=64,c=0``) or a JSON path."""
    name, params = _parse_params(spec)
    if name == "lcs-indicator":
        return lcs_indicator(int(params.get("k", 2)), int(params.get("m", 2)))
    if name == "perm-window":
        from .experiments import perm_window_model

        return perm_window_model(
            int(params["n"]), float(params.get("c", 0)), literal=params.get("formula") == "literal"
        )
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"no built-in model or file named {spec!r}")
    return model_from_json(json.loads(path.read_text()))


def load_distribution(path: str | None, model: ScoreModel) -> SequenceDistribution:
    """Uniform letters when ``path`` is None; otherwise ``{"probs": [...]}`` (one row, or one per sequence)."""
    if path is None:
        return SequenceDistribution.uniform(model.k, model.m)
    doc = json.loads(Path(path).read_text())
    probs = np.asarray(doc["probs"], dtype=np.float64)
    if probs.ndim == 1:
        dist = SequenceDistribution.iid(probs, model.m)
    else:
        dist = SequenceDistribution(probs)
    dist.check_model(model)
    return dist

