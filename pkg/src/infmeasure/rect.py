"""Infinite-dimensional rectangles, their alpha-Lebesgue values, and the Tychonoff metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import products
from .errors import DomainError, RectangleNotInClassError
from .products import (
    CONSTANT_ONE,
    CLOSED_FORM,
    ORDINARY,
    OSCILLATING,
    TRUNCATED,
    FactorSeq,
    GroupingAlpha,
    grouped_product,
)

UNIT = "unit"

MEASURE_TOL = products.DEFAULT_TOL


@dataclass(frozen=True)
class IntervalSeq:
    """The rectangle prod_k [a_k, b_k].

    The first ``len(coords)`` intervals are explicit. Beyond them the tail is
    ``unit`` ([0, 1] forever), ``closed_form`` (``lower(k)``, ``upper(k)``) or
    ``truncated`` (unspecified). ``log_length`` optionally overrides the side
    lengths with an analytic, vectorized ``k -> ln(b_k - a_k)`` valid for every
    index; it is what keeps boxes like ``exp(-1/(2^k eps))`` usable after the
    endpoints underflow.
    """

    coords: tuple[tuple[float, float], ...] = ()
    tail: str = UNIT
    lower: Callable[[int], float] | None = None
    upper: Callable[[int], float] | None = None
    log_length: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        coords = tuple((float(a), float(b)) for a, b in self.coords)
        object.__setattr__(self, "coords", coords)
        if self.tail not in (UNIT, CLOSED_FORM, TRUNCATED):
            raise DomainError(f"unknown tail {self.tail!r}")
        if self.tail == CLOSED_FORM and (self.lower is None or self.upper is None):
            raise DomainError("closed-form tail needs lower and upper")
        for k, (a, b) in enumerate(coords, start=1):
            if not a <= b:
                raise DomainError(f"coordinate {k}: need a <= b, got [{a}, {b}]")

    @property
    def depth(self) -> int:
        return len(self.coords)

    def interval(self, k: int) -> tuple[float, float]:
        if k < 1:
            raise DomainError("coordinates are 1-based")
        if k <= self.depth:
            return self.coords[k - 1]
        if self.tail == UNIT:
            return (0.0, 1.0)
        if self.tail == CLOSED_FORM:
            return (float(self.lower(k)), float(self.upper(k)))
        raise products.TailUnspecifiedError(f"coordinate {k} beyond truncated depth {self.depth}")

    def side_logs(self, k: np.ndarray) -> np.ndarray:
        """ln(b_k - a_k) for an integer array of 1-based indices."""
        k = np.asarray(k, dtype=np.int64)
        if self.log_length is not None:
            return np.broadcast_to(np.asarray(self.log_length(k), dtype=float), k.shape).astype(float)
        out = np.empty(len(k))
        for i, kk in enumerate(k):
            a, b = self.interval(int(kk))
            out[i] = math.log(b - a) if b > a else -math.inf
        return out

    def factors(self) -> FactorSeq:
        """Side lengths as a log-form factor sequence for the product engine."""
        tail = {UNIT: CONSTANT_ONE, CLOSED_FORM: products.CLOSED_FORM, TRUNCATED: TRUNCATED}[self.tail]
        if self.log_length is not None and self.tail == UNIT:
            tail = products.CLOSED_FORM
        return FactorSeq(log_factor=self.side_logs, tail=tail, depth=self.depth, vectorized=True)

    def shifted(self, shift: Sequence[float]) -> "IntervalSeq":
        """Translate by a cylinder point (finitely many non-zero entries)."""
        shift = [float(t) for t in shift]
        depth = max(self.depth, len(shift))
        pad = shift + [0.0] * (depth - len(shift))
        coords = []
        for k in range(1, depth + 1):
            a, b = self.interval(k)
            coords.append((a + pad[k - 1], b + pad[k - 1]))
        return IntervalSeq(
            tuple(coords), self.tail, self.lower, self.upper, self.log_length, self.name
        )

    def scaled(self, factors: Sequence[float]) -> "IntervalSeq":
        """Multiply coordinate k by ``factors[k-1]`` (coordinates beyond are untouched)."""
        factors = [float(s) for s in factors]
        if any(s == 0 for s in factors):
            raise DomainError("zero scale factor")
        depth = max(self.depth, len(factors))
        coords = []
        for k in range(1, depth + 1):
            s = factors[k - 1] if k <= len(factors) else 1.0
            a, b = self.interval(k)
            coords.append(tuple(sorted((s * a, s * b))))
        log_length = None
        if self.log_length is not None:
            shift = np.log(np.abs(np.asarray(factors)))
            base = self.log_length

            def log_length(k):
                k = np.asarray(k, dtype=np.int64)
                out = np.array(base(k), dtype=float, copy=True)
                inside = k <= len(shift)
                out[inside] += shift[k[inside] - 1]
                return out

        return IntervalSeq(tuple(coords), self.tail, self.lower, self.upper, log_length, self.name)

    def negated(self) -> "IntervalSeq":
        """The reflection -R = prod [-b_k, -a_k]."""
        coords = tuple((-b, -a) for a, b in self.coords)
        if self.tail == TRUNCATED:
            return IntervalSeq(coords, TRUNCATED, log_length=self.log_length, name=self.name)
        if self.tail == UNIT:
            lower, upper = (lambda k: -1.0), (lambda k: 0.0)
        else:
            lower = lambda k, up=self.upper: -up(k)
            upper = lambda k, lo=self.lower: -lo(k)
        return IntervalSeq(coords, CLOSED_FORM, lower, upper, self.log_length, self.name)

    def intersect(self, other: "IntervalSeq") -> "IntervalSeq":
        """Intersection of two rectangles with unit tails beyond a common depth."""
        if self.tail != UNIT or other.tail != UNIT:
            raise DomainError("intersection is supported only for unit tails")
        depth = max(self.depth, other.depth)
        coords = []
        for k in range(1, depth + 1):
            a1, b1 = self.interval(k)
            a2, b2 = other.interval(k)
            a, b = max(a1, a2), min(b1, b2)
            if a > b:
                raise DomainError(f"empty intersection in coordinate {k}")
            coords.append((a, b))
        return IntervalSeq(tuple(coords), UNIT)

    def contains_interval(self, k: int, c: float, d: float) -> bool:
        a, b = self.interval(k)
        return a <= c and d <= b


def unit_cube(coords: Sequence[tuple[float, float]] = ()) -> IntervalSeq:
    """``prod [0, 1]``, optionally with explicit leading intervals."""
    return IntervalSeq(tuple(coords), UNIT, name="unit")


def counterexample_box() -> IntervalSeq:
    """prod [0, exp((-1)^k / k)]: ordinary value 1/2, standard value 0."""

    def log_length(k):
        k = np.asarray(k, dtype=float)
        return np.where(k % 2 == 0, 1.0, -1.0) / k

    return IntervalSeq(
        (),
        CLOSED_FORM,
        lower=lambda k: 0.0,
        upper=lambda k: math.exp((-1) ** k / k),
        log_length=log_length,
        name="X_counterexample",
    )


@dataclass(frozen=True)
class DeltaBox:
    """Delta_eps = prod [-a_k, a_k] with a_k(eps) = exp(-1/(2^k eps)) / 2."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")

    def half_width(self, k):
        return 0.5 * np.exp(self.log_side(k))

    def log_half_width(self, k):
        return self.log_side(k) - math.log(2.0)

    def log_side(self, k):
        """ln(2 a_k) = -1/(2^k eps), exact even when a_k underflows."""
        return -np.ldexp(1.0 / self.epsilon, -np.asarray(k, dtype=np.int64))

    @property
    def log_measure(self) -> float:
        """Closed form: sum_k 1/(2^k eps) = 1/eps."""
        return -1.0 / self.epsilon

    def as_rect(self) -> IntervalSeq:
        hw = lambda k: float(self.half_width(k))
        return IntervalSeq(
            (),
            CLOSED_FORM,
            lower=lambda k: -hw(k),
            upper=hw,
            log_length=self.log_side,
            name=f"delta_box(eps={self.epsilon!r})",
        )


@dataclass(frozen=True)
class ElementaryRect:
    """A rectangle that differs from ``parent`` in finitely many coordinates."""

    parent: IntervalSeq
    overrides: tuple[tuple[int, tuple[float, float]], ...] = ()

    def __post_init__(self):
        items = self.overrides.items() if isinstance(self.overrides, dict) else self.overrides
        norm = tuple(sorted((int(k), (float(c), float(d))) for k, (c, d) in items))
        ks = [k for k, _ in norm]
        if len(set(ks)) != len(ks):
            raise DomainError("duplicate override coordinate")
        for k, (c, d) in norm:
            a, b = self.parent.interval(k)
            if not (a <= c < d <= b):
                raise DomainError(f"override {k}: need {a} <= c < d <= {b}, got [{c}, {d}]")
        object.__setattr__(self, "overrides", norm)

    @property
    def override_map(self) -> dict[int, tuple[float, float]]:
        return dict(self.overrides)

    @property
    def m(self) -> int:
        return max((k for k, _ in self.overrides), default=0)

    def interval(self, k: int) -> tuple[float, float]:
        return self.override_map.get(k) or self.parent.interval(k)

    def contains(self, points: np.ndarray, tail=None) -> np.ndarray:
        """Half-open membership [c, d) on override coordinates.

        ``points`` has shape (N, D); coordinate k is column k-1. ``tail`` maps
        k -> value for coordinates beyond D (anchor points).
        """
        points = np.atleast_2d(points)
        inside = np.ones(len(points), dtype=bool)
        for k, (c, d) in self.overrides:
            if k <= points.shape[1]:
                x = points[:, k - 1]
            elif tail is not None:
                x = np.full(len(points), float(tail(k)))
            else:
                raise DomainError(f"coordinate {k} not available")
            inside &= (x >= c) & (x < d)
        return inside

    def side_logs(self, k):
        k = np.asarray(k, dtype=np.int64)
        out = self.parent.side_logs(k)
        for kk, (c, d) in self.overrides:
            out[k == kk] = math.log(d - c)
        return out

    def as_rect(self) -> IntervalSeq:
        depth = max(self.parent.depth, self.m)
        coords = tuple(self.interval(k) for k in range(1, depth + 1))
        log_length = None
        if self.parent.log_length is not None:
            log_length = self.side_logs
        p = self.parent
        return IntervalSeq(coords, p.tail, p.lower, p.upper, log_length, p.name)


@dataclass(frozen=True)
class MeasureValue:
    """log_value = -inf encodes measure zero."""

    log_value: float
    status: str

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _measure_of(factors: FactorSeq, alpha: GroupingAlpha, mode: str) -> MeasureValue:
    res = grouped_product(
        factors,
        alpha,
        mode,
        MEASURE_TOL,
        products.DEFAULT_MAX_TERMS,
        **({"log_floor": -1.0 / MEASURE_TOL, "log_ceiling": 1.0 / MEASURE_TOL} if mode == ORDINARY else {}),
    )
    if res.status == OSCILLATING:
        raise RectangleNotInClassError(
            f"{mode} product of side lengths oscillates after {res.partials_inspected} terms"
        )
    return MeasureValue(res.log_value, res.status)


def rect_measure(
    r: IntervalSeq, alpha: GroupingAlpha | None = None, mode: str = ORDINARY
) -> MeasureValue:
    """Ordinary (mu_alpha) or standard (nu_alpha) alpha-Lebesgue value of ``r``."""
    if r.tail == TRUNCATED:
        raise DomainError("rectangle needs a unit or closed-form tail")
    return _measure_of(r.factors(), alpha or GroupingAlpha(), mode)


def elementary_measure(
    u: ElementaryRect, alpha: GroupingAlpha | None = None, mode: str = ORDINARY
) -> MeasureValue:
    if u.parent.tail == TRUNCATED:
        raise DomainError("rectangle needs a unit or closed-form tail")
    base = u.parent.factors()
    seq = FactorSeq(
        log_factor=u.side_logs,
        tail=base.tail,
        depth=max(base.depth, u.m) if base.tail == CONSTANT_ONE else base.depth,
        vectorized=True,
    )
    return _measure_of(seq, alpha or GroupingAlpha(), mode)


def tychonoff_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """sum_k |x_k - y_k| / (2^k (1 + |x_k - y_k|)) for points with equal tails."""
    n = max(len(x), len(y))
    xs = np.zeros(n)
    ys = np.zeros(n)
    xs[: len(x)] = x
    ys[: len(y)] = y
    diff = np.abs(xs - ys)
    k = np.arange(1, n + 1)
    return math.fsum(diff / (np.exp2(k) * (1.0 + diff)))


def _truncation_depth(tail_tol: float) -> int:
    """Smallest K with sum_{k>K} 2^-k = 2^-K < tail_tol."""
    if not tail_tol > 0:
        raise DomainError("tail_tol must be positive")
    return max(1, math.floor(-math.log2(tail_tol)) + 1)


def diameter(r: IntervalSeq | ElementaryRect, tail_tol: float = 1e-15) -> float:
    """Tychonoff diameter sum_k l_k / (2^k (1 + l_k)), truncated within tail_tol."""
    K = _truncation_depth(tail_tol)
    k = np.arange(1, K + 1)
    length = np.exp(r.side_logs(k))
    return math.fsum(length / (np.exp2(k) * (1.0 + length)))


def delta_box_diameter(eps: float, tail_tol: float = 1e-15) -> float:
    """Diameter of Delta_eps; an under-approximation by at most ``tail_tol``."""
    K = _truncation_depth(tail_tol)
    k = np.arange(1, K + 1)
    side = np.exp(DeltaBox(eps).log_side(k))
    return math.fsum(side / (np.exp2(k) * (1.0 + side)))


def _restricted_measure(r: IntervalSeq, x: ElementaryRect, alpha, mode) -> float:
    """mu_R(X) = value(R) * prod_k m(X_k cap R_k) / m(R_k), in log space."""
    total = rect_measure(r, alpha, mode)
    if total.log_value == -math.inf:
        return -math.inf
    depth = max(r.depth, x.parent.depth, x.m)
    acc = [total.log_value]
    for k in range(1, depth + 1):
        a, b = r.interval(k)
        c, d = x.interval(k)
        lo, hi = max(a, c), min(b, d)
        if hi <= lo:
            return -math.inf
        acc.append(math.log(hi - lo) - math.log(b - a))
    return math.fsum(acc)


def consistency_check(
    r1: IntervalSeq,
    r2: IntervalSeq,
    x: ElementaryRect,
    alpha: GroupingAlpha | None = None,
    mode: str = ORDINARY,
    rtol: float = 1e-10,
) -> bool:
    """Whether mu_{r1}(x) and mu_{r2}(x) agree for x inside r1 cap r2."""
    common = r1.intersect(r2)
    depth = max(common.depth, x.m, x.parent.depth)
    for k in range(1, depth + 1):
        c, d = x.interval(k)
        if not common.contains_interval(k, c, d):
            raise DomainError(f"x is not inside r1 cap r2 at coordinate {k}")
    v1 = _restricted_measure(r1, x, alpha, mode)
    v2 = _restricted_measure(r2, x, alpha, mode)
    if v1 == v2:
        return True
    return abs(math.exp(v1) - math.exp(v2)) <= rtol * max(math.exp(v1), math.exp(v2))


def _with_leading(base: IntervalSeq, coords: Sequence[tuple[float, float]]) -> IntervalSeq:
    """``base`` with its first len(coords) intervals replaced."""
    coords = tuple((float(a), float(b)) for a, b in coords)
    log_length = None
    if base.log_length is not None:
        head = np.array([math.log(b - a) if b > a else -math.inf for a, b in coords])
        tail_fn = base.log_length

        def log_length(k):
            k = np.asarray(k, dtype=np.int64)
            out = np.array(np.broadcast_to(tail_fn(k), k.shape), dtype=float, copy=True)
            inside = k <= len(head)
            out[inside] = head[k[inside] - 1]
            return out

    return IntervalSeq(coords, base.tail, base.lower, base.upper, log_length, base.name)


def rect_from_spec(spec: dict) -> IntervalSeq:
    """Build a rectangle from its JSON form.

    ``{"coords": [[a, b], ...], "tail": "unit" | "delta_box", "epsilon": e, "depth": d}``;
    ``coords`` replace the leading intervals, ``depth`` (optional) must equal
    their count, and ``epsilon`` is required for a delta-box tail.
    """
    coords = [tuple(c) for c in spec.get("coords", [])]
    if any(len(c) != 2 for c in coords):
        raise DomainError("coords must be [a, b] pairs")
    depth = spec.get("depth")
    if depth is not None and int(depth) != len(coords):
        raise DomainError(f"depth {depth} does not match {len(coords)} coords")
    tail = spec.get("tail", UNIT)
    if tail == UNIT:
        return unit_cube(coords)
    if tail == "delta_box":
        if "epsilon" not in spec:
            raise DomainError("delta_box tail needs epsilon")
        return _with_leading(DeltaBox(float(spec["epsilon"])).as_rect(), coords)
    raise DomainError(f"unknown tail {tail!r}")


def rect_to_spec(r: IntervalSeq, epsilon: float | None = None) -> dict:
    """Inverse of :func:`rect_from_spec`; floats keep 17 significant digits."""
    spec = {
        "coords": [[float(f"{a:.17g}"), float(f"{b:.17g}")] for a, b in r.coords],
        "depth": r.depth,
    }
    if r.tail == UNIT:
        spec["tail"] = UNIT
    elif epsilon is not None:
        spec["tail"] = "delta_box"
        spec["epsilon"] = float(f"{epsilon:.17g}")
    else:
        raise DomainError("only unit and delta-box tails have a JSON form")
    return spec
