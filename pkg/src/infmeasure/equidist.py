"""Uniformly distributed point families in infinite-dimensional rectangles.

The family of size n takes the first n points of a one-dimensional uniformly
distributed sequence in each of the first n coordinates, forms their
Cartesian product, and pins every later coordinate to an anchor value. Its
cardinality is n**n, so families are kept in factored form: counting ratios
and averages of cylinder functions are computed per coordinate, and the full
point array is only built on request (subject to a budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceededError, DomainError
from .functions import CylinderFn
from .rect import ElementaryRect, IntervalSeq

VAN_DER_CORPUT = "van_der_corput_base2"
WEYL = "weyl_irrational"
RANDOM = "seeded_random"
KINDS = (VAN_DER_CORPUT, WEYL, RANDOM)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BUDGET = 10**6


def radical_inverse_base2(idx) -> np.ndarray:
    """Van der Corput points: the binary digits of each index mirrored about the point."""
    n = np.asarray(idx, dtype=np.int64).copy()
    out = np.zeros(n.shape)
    scale = 0.5
    while (n > 0).any():
        out += (n & 1) * scale
        n >>= 1
        scale *= 0.5
    return out


@dataclass(frozen=True)
class CoordSequence:
    kind: str = VAN_DER_CORPUT
    interval: tuple[float, float] = (0.0, 1.0)
    multiplier: float = GOLDEN
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown sequence kind {self.kind!r}")
        a, b = self.interval
        if not a <= b:
            raise DomainError("interval must satisfy a <= b")

    def on(self, interval: tuple[float, float]) -> "CoordSequence":
        return CoordSequence(self.kind, tuple(interval), self.multiplier, self.seed)

    def unit_points(self, count: int) -> np.ndarray:
        idx = np.arange(1, count + 1)
        if self.kind == VAN_DER_CORPUT:
            return radical_inverse_base2(idx)
        if self.kind == WEYL:
            return np.mod(idx * self.multiplier, 1.0)
        return np.random.default_rng(self.seed).random(count)


def coord_points(seq: CoordSequence, count: int) -> np.ndarray:
    """First ``count`` points of ``seq`` mapped affinely into its interval."""
    if count < 1:
        raise DomainError("count must be at least 1")
    a, b = seq.interval
    if a == b:
        return np.full(count, a)
    return a + (b - a) * seq.unit_points(count)


@dataclass(frozen=True, eq=False)
class PointFamily:
    """Y_n in factored form: ``coordinate_sets[k-1]`` holds the n values of coordinate k."""

    n: int
    parent: IntervalSeq
    coordinate_sets: tuple[np.ndarray, ...]
    anchor: Callable[[int], float]

    @property
    def size(self) -> int:
        return self.n**self.n

    def coordinate_values(self, k: int) -> np.ndarray:
        if k <= self.n:
            return self.coordinate_sets[k - 1]
        value = float(self.anchor(k))
        a, b = self.parent.interval(k)
        if not a <= value <= b:
            raise DomainError(f"anchor {value} outside [{a}, {b}] at coordinate {k}")
        return np.array([value])

    def points(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """All n**n points as an (n**n, n) array, in lexicographic order."""
        if self.size > budget:
            raise BudgetExceededError(f"{self.size} points exceed budget {budget}")
        grids = np.meshgrid(*self.coordinate_sets, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def _sequence_for(seqs, k: int, rect: IntervalSeq) -> CoordSequence:
    if seqs is None:
        return CoordSequence(VAN_DER_CORPUT, rect.interval(k))
    if isinstance(seqs, str):
        return CoordSequence(seqs, rect.interval(k))
    if isinstance(seqs, CoordSequence):
        return seqs.on(rect.interval(k))
    if callable(seqs):
        return seqs(k)
    return seqs[k - 1]


def product_family(
    rect: IntervalSeq,
    seqs: Sequence[CoordSequence] | Callable | str | CoordSequence | None = None,
    n: int = 1,
    anchors: Callable[[int], float] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> PointFamily:
    """Build Y_n inside ``rect``.

    ``seqs`` is a per-coordinate list of sequences, a callable k -> sequence,
    or a kind name / template sequence applied to every coordinate. Anchors
    default to interval midpoints.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n**n > budget:
        raise BudgetExceededError(f"family of size {n}^{n} = {n**n} exceeds budget {budget}")
    sets = []
    for k in range(1, n + 1):
        seq = _sequence_for(seqs, k, rect)
        pts = coord_points(seq, n)
        a, b = rect.interval(k)
        if (pts < a).any() or (pts > b).any():
            raise DomainError(f"sequence for coordinate {k} leaves [{a}, {b}]")
        sets.append(pts)
    if anchors is None:
        anchors = lambda k: 0.5 * sum(rect.interval(k))
    return PointFamily(n, rect, tuple(sets), anchors)


def equidist_count(fam: PointFamily, u: ElementaryRect) -> tuple[int, int]:
    """(#(Y_n cap U), #Y_n) computed coordinate by coordinate."""
    hits, total = 1, fam.size
    for k, (c, d) in u.overrides:
        vals = fam.coordinate_values(k)
        inside = int(np.count_nonzero((vals >= c) & (vals < d)))
        if k <= fam.n:
            hits *= inside
        elif inside == 0:
            return 0, total
    # the product over overridden coordinates counts tuples on those axes;
    # free axes contribute n choices each
    free = fam.n - sum(1 for k, _ in u.overrides if k <= fam.n)
    return hits * fam.n**free, total


def equidist_ratio(fam: PointFamily, u: ElementaryRect) -> float:
    """#(Y_n cap U) / #(Y_n), with half-open [c, d) membership on overrides."""
    hits, total = equidist_count(fam, u)
    return float(Fraction(hits, total))


def family_average(f: CylinderFn, fam: PointFamily) -> float:
    """Mean of f over Y_n, using only the coordinates f depends on.

    Each combination of the first min(m, n) coordinates occurs n**(n-m) times
    in Y_n, so averaging over the reduced grid is exact.
    """
    axes = [fam.coordinate_values(k) for k in range(1, f.m + 1)]
    count = math.prod(len(a) for a in axes)
    if count > DEFAULT_BUDGET:
        raise BudgetExceededError(f"{count} evaluation points exceed budget")
    grids = np.meshgrid(*axes, indexing="ij")
    values = f(np.stack([g.ravel() for g in grids], axis=1))
    return math.fsum(values) / count
