"""Riemann partitions of infinite rectangles, Darboux brackets, and integrals.

Only the coordinates a cylinder function depends on are partitioned; the
tail of the rectangle stays whole, so every cell is an elementary rectangle.
Cell extrema are estimated on a sample lattice (corners plus midpoint at the
coarsest setting), which is exact for functions monotone in each coordinate
and an estimate otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .equidist import VAN_DER_CORPUT, family_average, product_family
from .errors import BudgetExceededError, DomainError, NoConvergenceError
from .functions import CylinderFn
from .products import ZERO
from .rect import ElementaryRect, IntervalSeq, _truncation_depth, rect_measure

DEFAULT_CELL_BUDGET = 10**6
# coordinates narrower than this (relative) are not subdivided
FROZEN_WIDTH = 1e-14


@dataclass(frozen=True, eq=False)
class Partition:
    """Grid over the first ``m`` coordinates; ``edges[k-1]`` are the cut points of coordinate k."""

    rect: IntervalSeq
    edges: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def cuts(self) -> tuple[int, ...]:
        return tuple(len(e) - 1 for e in self.edges)

    @property
    def n_cells(self) -> int:
        return math.prod(self.cuts)

    def cells(self) -> Iterator[ElementaryRect]:
        ranges = [range(c) for c in self.cuts]
        for index in itertools.product(*ranges):
            overrides = {}
            for k, j in enumerate(index, start=1):
                e = self.edges[k - 1]
                if e[0] < e[-1]:
                    overrides[k] = (e[j], e[j + 1])
            yield ElementaryRect(self.rect, overrides)

    def weights(self) -> list[np.ndarray]:
        """Per-coordinate cell widths relative to the side length."""
        out = []
        for e in self.edges:
            span = e[-1] - e[0]
            out.append(np.diff(e) / span if span > 0 else np.ones(len(e) - 1) / (len(e) - 1))
        return out


@dataclass(frozen=True)
class DarbouxBracket:
    lower: float
    upper: float
    mesh: float
    midpoint: float


def grid_partition(
    rect: IntervalSeq,
    m: int,
    cuts_per_coord: int | Sequence[int],
    budget: int = DEFAULT_CELL_BUDGET,
) -> Partition:
    """Uniform grid with ``cuts_per_coord`` slabs in each of the first m coordinates."""
    if m < 1:
        raise DomainError("m must be at least 1")
    cuts = [cuts_per_coord] * m if isinstance(cuts_per_coord, int) else list(cuts_per_coord)
    if len(cuts) != m or any(c < 1 for c in cuts):
        raise DomainError("need one positive cut count per coordinate")
    if math.prod(cuts) > budget:
        raise BudgetExceededError(f"{math.prod(cuts)} cells exceed budget {budget}")
    edges = []
    for k, c in enumerate(cuts, start=1):
        a, b = rect.interval(k)
        if a == b:
            c = 1
        e = np.linspace(a, b, c + 1)
        e[0], e[-1] = a, b
        edges.append(e)
    return Partition(rect, tuple(edges))


def mesh(p: Partition, tail_tol: float = 1e-15) -> float:
    """Largest Tychonoff diameter of a cell.

    The cell diameter is increasing and separable in the side lengths, so the
    maximum is attained by the cell that is widest in every coordinate.
    """
    K = max(_truncation_depth(tail_tol), p.m)
    k = np.arange(1, K + 1)
    length = np.exp(p.rect.side_logs(k))
    for i, e in enumerate(p.edges):
        length[i] = np.diff(e).max()
    return math.fsum(length / (np.exp2(k) * (1.0 + length)))


def _axis_nodes(edges: np.ndarray, s: int) -> np.ndarray:
    if len(edges) == 2 and edges[0] == edges[1]:
        return np.full(s, edges[0])
    t = np.linspace(0.0, 1.0, s)[:-1]
    lo, hi = edges[:-1, None], edges[1:, None]
    inner = (lo + (hi - lo) * t).ravel()
    return np.concatenate([inner, edges[-1:]])


def _grid_eval(f: CylinderFn, axes: list[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return f(pts).reshape([len(a) for a in axes])


def _cell_reduce(values: np.ndarray, s: int, op) -> np.ndarray:
    for axis in range(values.ndim):
        win = sliding_window_view(values, s, axis=axis)
        take = [slice(None)] * values.ndim
        take[axis] = slice(None, None, s - 1)
        values = op(win[tuple(take)], axis=-1)
    return values


def _weighted_sum(values: np.ndarray, weights: list[np.ndarray]) -> float:
    w = weights[0]
    for extra in weights[1:]:
        w = np.multiply.outer(w, extra)
    return math.fsum((values * w).ravel())


def _normalized_bracket(f: CylinderFn, p: Partition, samples: int):
    """(lower, upper, midpoint) sums divided by the rectangle's measure."""
    if f.m > p.m:
        raise DomainError(f"function depends on {f.m} coordinates, partition covers {p.m}")
    if samples < 2:
        raise DomainError("need at least 2 samples per cell edge (the corners)")
    edges = list(p.edges[: f.m])
    weights = p.weights()[: f.m]
    nodes = [_axis_nodes(e, samples) for e in edges]
    grid = _grid_eval(f, nodes)
    hi = _cell_reduce(grid, samples, np.max)
    lo = _cell_reduce(grid, samples, np.min)
    mid = _grid_eval(f, [0.5 * (e[:-1] + e[1:]) for e in edges])
    hi = np.maximum(hi, mid)
    lo = np.minimum(lo, mid)
    return (
        _weighted_sum(lo, weights),
        _weighted_sum(hi, weights),
        _weighted_sum(mid, weights),
    )


def darboux(f: CylinderFn, p: Partition, samples_per_cell: int = 2) -> DarbouxBracket:
    """Lower and upper Darboux sums of f over the partition.

    ``samples_per_cell`` is the number of lattice points per cell edge
    (2 = corners only); the cell midpoint is always sampled as well.
    """
    lo, hi, mid = _normalized_bracket(f, p, samples_per_cell)
    total = rect_measure(p.rect)
    scale = 0.0 if total.status == ZERO else math.exp(total.log_value)
    return DarbouxBracket(lo * scale, hi * scale, mesh(p), mid * scale)


@dataclass(frozen=True)
class AverageEstimate:
    """Box average of f (integral divided by measure) with its bracket."""

    value: float
    lower: float
    upper: float
    cuts: tuple[int, ...]
    converged: bool

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _active(rect: IntervalSeq, m: int) -> list[bool]:
    flags = []
    for k in range(1, m + 1):
        a, b = rect.interval(k)
        flags.append(b - a > FROZEN_WIDTH * max(1.0, abs(a), abs(b)))
    return flags


def box_average(
    f: CylinderFn,
    rect: IntervalSeq,
    tol: float,
    *,
    samples_per_cell: int = 2,
    budget: int = DEFAULT_CELL_BUDGET,
    strict: bool = True,
    on_round=None,
) -> AverageEstimate:
    """(1/lambda(R)) * integral of f over R, refined until the bracket is narrower than tol.

    The cut count doubles each round on every coordinate wider than
    :data:`FROZEN_WIDTH`. With ``strict=False`` a budget overrun returns the
    last estimate flagged ``converged=False`` instead of raising.
    ``on_round`` is called with each intermediate estimate.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    active = _active(rect, f.m)
    c = 1 if not any(active) else 2
    last = None
    while True:
        cuts = [c if a else 1 for a in active]
        if math.prod(cuts) > budget:
            if strict or last is None:
                raise BudgetExceededError(
                    f"bracket width {last.width if last else math.inf:.3g} still above {tol:.3g} "
                    f"at the cell budget {budget}"
                )
            return AverageEstimate(last.value, last.lower, last.upper, last.cuts, False)
        p = grid_partition(rect, f.m, cuts, budget)
        lo, hi, mid = _normalized_bracket(f, p, samples_per_cell)
        last = AverageEstimate(mid, lo, hi, tuple(cuts), hi - lo < tol)
        if on_round is not None:
            on_round(last)
        if last.converged or not any(active):
            return last
        c *= 2


def riemann_integral(
    f: CylinderFn, rect: IntervalSeq, tol: float, budget: int = DEFAULT_CELL_BUDGET
) -> float:
    """Midpoint Riemann sum once the Darboux bracket is narrower than tol * lambda(rect)."""
    total = rect_measure(rect)
    if total.status == ZERO or not math.isfinite(total.log_value):
        raise DomainError("rectangle must have finite non-zero measure")
    avg = box_average(f, rect, tol, budget=budget)
    return math.exp(total.log_value) * avg.value


def average_vs_integral(
    f: CylinderFn,
    rect: IntervalSeq,
    n: int,
    *,
    kind: str = VAN_DER_CORPUT,
    tol: float = 1e-4,
    family_budget: int | None = None,
) -> tuple[float, float]:
    """(mean of f over Y_n, integral of f over rect divided by its measure)."""
    kwargs = {} if family_budget is None else {"budget": family_budget}
    fam = product_family(rect, kind, n, **kwargs)
    return family_average(f, fam), box_average(f, rect, tol).value


def box_extrema(f: CylinderFn, rect: IntervalSeq, cuts: int = 16):
    """Lattice arg-min and arg-max of f over the first f.m coordinates of rect.

    Returns (zmin, zmax) as cylinder points of length f.m.
    """
    axes = []
    for k, act in enumerate(_active(rect, f.m), start=1):
        a, b = rect.interval(k)
        axes.append(np.linspace(a, b, cuts + 1) if act else np.array([0.5 * (a + b)]))
    grid = _grid_eval(f, axes)
    imin = np.unravel_index(np.argmin(grid), grid.shape)
    imax = np.unravel_index(np.argmax(grid), grid.shape)
    zmin = np.array([axes[i][j] for i, j in enumerate(imin)])
    zmax = np.array([axes[i][j] for i, j in enumerate(imax)])
    return zmin, zmax


def _inside(rect: IntervalSeq, z: np.ndarray) -> bool:
    return all(rect.interval(k)[0] <= z[k - 1] <= rect.interval(k)[1] for k in range(1, len(z) + 1))


def intermediate_value_point(
    f: CylinderFn,
    rect: IntervalSeq,
    u: float,
    zmin: Sequence[float],
    zmax: Sequence[float],
    tol: float = 1e-12,
    max_iter: int = 200,
) -> np.ndarray:
    """A point c on the segment [zmin, zmax] inside rect with |f(c) - u| <= tol.

    Bisects g(t) = f(zmin + t (zmax - zmin)) on [0, 1]; rectangles are convex,
    so every point of the segment lies in rect.
    """
    d = max(len(zmin), len(zmax), f.m)
    z0 = np.zeros(d)
    z1 = np.zeros(d)
    z0[: len(zmin)] = zmin
    z1[: len(zmax)] = zmax
    if not (_inside(rect, z0) and _inside(rect, z1)):
        raise DomainError("zmin and zmax must lie in the rectangle")
    g0, g1 = f.at(z0), f.at(z1)
    if not g0 <= u <= g1:
        raise DomainError(f"need f(zmin) <= u <= f(zmax), got {g0} <= {u} <= {g1}")
    if abs(g0 - u) <= tol:
        return z0
    if abs(g1 - u) <= tol:
        return z1
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        t = 0.5 * (lo + hi)
        c = z0 + t * (z1 - z0)
        gc = f.at(c)
        if abs(gc - u) <= tol:
            return c
        if gc < u:
            lo = t
        else:
            hi = t
        if hi - lo < 1e-17:
            break
    raise NoConvergenceError(f"bisection stalled with residual {abs(gc - u):.3g}", partial=c)
