"""The Dirac delta functional on continuous cylinder functions.

The nascent delta has height exp(1/eps) on Delta_eps, whose measure is
exp(-1/eps). Integrals of the nascent delta against f are therefore always
evaluated as box averages; the huge height and tiny measure cancel exactly
and are never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .equidist import VAN_DER_CORPUT, family_average, product_family
from .errors import DepthError, DomainError, NoConvergenceError
from .functions import CylinderFn
from .rect import DeltaBox, IntervalSeq, rect_measure
from .riemann import box_average

DEFAULT_EPS_SCHEDULE = tuple(2.0**-j for j in range(1, 13))
DEFAULT_N_SCHEDULE = (2, 3, 4, 5, 6, 7)

ZERO = "zero"
ONE = "one"
INFINITE = "infinite"


@dataclass(frozen=True)
class NascentDelta:
    epsilon: float

    @property
    def box(self) -> DeltaBox:
        return DeltaBox(self.epsilon)

    @property
    def log_height(self) -> float:
        return 1.0 / self.epsilon


@dataclass(frozen=True)
class LimitEstimate:
    """Result of a limit schedule; ``history`` holds one estimate per epsilon used."""

    value: float
    eps_schedule: tuple[float, ...]
    n_schedule: tuple[int, ...]
    cauchy_gap: float
    history: tuple[float, ...] = field(default=())


def nascent_eval(
    nd: NascentDelta,
    x: Sequence[float] | Callable[[int], float],
    depth: int | None = None,
    tail_bound: float | None = None,
) -> float:
    """log eta_eps(x): 1/eps inside Delta_eps, -inf outside.

    ``x`` is a cylinder point (zero beyond its length). A callable point is
    inspected up to ``depth``; its tail is accepted only when ``tail_bound``
    certifies |x_k| <= a_{depth+1}(eps) for all k > depth, since a_k grows in k.
    """
    box = nd.box
    if callable(x):
        if depth is None:
            raise DepthError("a callable point needs a depth")
        coords = np.array([float(x(k)) for k in range(1, depth + 1)])
        certified = tail_bound is not None and tail_bound <= float(box.half_width(depth + 1))
    else:
        coords = np.asarray(x, dtype=float)
        certified = True
    k = np.arange(1, len(coords) + 1)
    nz = coords != 0
    # compare in log space: a_k underflows long before 1/(2^k eps) is large
    with np.errstate(divide="ignore"):
        outside = nz & (np.log(np.abs(coords)) > box.log_half_width(k))
    if outside.any():
        return -math.inf
    if not certified:
        raise DepthError(f"membership undecided beyond coordinate {depth}")
    return nd.log_height


def _check_schedule(eps_schedule):
    eps = tuple(float(e) for e in eps_schedule)
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("epsilon schedule must be positive and strictly decreasing")
    return eps


def _box_mean(f: CylinderFn, rect: IntervalSeq, tol: float) -> float:
    return box_average(f, rect, tol, strict=False).value


def _outer_limit(estimate_at, eps_schedule, tol, n_schedule=()):
    eps = _check_schedule(eps_schedule)
    history: list[float] = []
    used: list[float] = []
    gap = math.inf
    for e in eps:
        history.append(estimate_at(e))
        used.append(e)
        if len(history) > 1:
            gap = abs(history[-1] - history[-2])
            if gap < tol:
                return LimitEstimate(history[-1], tuple(used), tuple(n_schedule), gap, tuple(history))
    partial = LimitEstimate(history[-1], tuple(used), tuple(n_schedule), gap, tuple(history))
    raise NoConvergenceError(
        f"epsilon schedule exhausted with successive gap {gap:.3g} >= {tol:.3g}", partial=partial
    )


def delta_via_integral(
    f: CylinderFn, eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE, tol: float = 1e-6
) -> LimitEstimate:
    """lim_{eps->0} of the average of f over Delta_eps; equals f(0) for continuous f."""
    return _outer_limit(lambda e: _box_mean(f, DeltaBox(e).as_rect(), tol / 2), eps_schedule, tol)


def delta_via_families(
    f: CylinderFn,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    n_schedule: Sequence[int] = DEFAULT_N_SCHEDULE,
    tol: float = 5e-2,
    kind: str = VAN_DER_CORPUT,
) -> LimitEstimate:
    """Double limit: averages over Y_n(eps) in Delta_eps, n first, then eps.

    The inner limit stops once successive n differ by less than tol/2; if the
    n schedule runs out first its last average is used.
    """
    ns = _check_n_schedule(n_schedule)
    return _outer_limit(
        lambda e: family_inner_limit(f, e, ns, tol / 2, kind), eps_schedule, tol / 2, ns
    )


def _check_n_schedule(n_schedule):
    ns = tuple(int(n) for n in n_schedule)
    if not ns or ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise DomainError("n schedule must be non-empty and increasing")
    return ns


def family_inner_limit(
    f: CylinderFn,
    eps: float,
    n_schedule: Sequence[int] = DEFAULT_N_SCHEDULE,
    tol: float = 2.5e-2,
    kind: str = VAN_DER_CORPUT,
) -> float:
    """Average of f over Y_n inside Delta_eps for increasing n, until successive n agree within tol."""
    rect = DeltaBox(eps).as_rect()
    prev = None
    for n in _check_n_schedule(n_schedule):
        value = family_average(f, product_family(rect, kind, n))
        if prev is not None and abs(value - prev) < tol:
            return value
        prev = value
    return prev


def sifting(
    f: CylinderFn,
    shift: Sequence[float],
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    tol: float = 1e-6,
) -> LimitEstimate:
    """lim of the average of f over Delta_eps + T; equals f(T)."""
    return _outer_limit(
        lambda e: _box_mean(f, DeltaBox(e).as_rect().shifted(shift), tol / 2), eps_schedule, tol
    )


@dataclass(frozen=True)
class ScalingResult:
    """Truncated log ratio -D ln|alpha| and the limiting class of |alpha|^(-inf)."""

    log_ratio: float
    status: str


def scaling_ratio(alpha_scalar: float, depth: int, eps: float) -> ScalingResult:
    """log of lambda_D((1/alpha) Delta_eps) / lambda_D(Delta_eps) over the first D coordinates."""
    if alpha_scalar == 0:
        raise DomainError("alpha must be non-zero")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    box = DeltaBox(eps)
    k = np.arange(1, depth + 1)
    base = box.log_side(k)
    scaled = box.as_rect().scaled([1.0 / alpha_scalar] * depth).side_logs(k)
    log_ratio = math.fsum(scaled) - math.fsum(base)
    a = abs(alpha_scalar)
    status = ONE if a == 1 else (ZERO if a > 1 else INFINITE)
    return ScalingResult(log_ratio, status)


def evenness_check(f: CylinderFn, eps: float, tol: float = 1e-6) -> bool:
    """Whether the Delta_eps averages of f(-x) and f(x) agree within tol."""
    rect = DeltaBox(eps).as_rect()
    a = _box_mean(f, rect, tol / 2)
    b = _box_mean(f.reflected(), rect, tol / 2)
    return abs(a - b) <= tol


def height_measure_balance(eps: float) -> float:
    """log height + log lambda(Delta_eps); identically zero."""
    return NascentDelta(eps).log_height + rect_measure(DeltaBox(eps).as_rect()).log_value
