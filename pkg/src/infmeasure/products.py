"""Ordinary and standard infinite products, with optional block grouping.

Everything is accumulated as a running sum of natural logarithms. A factor of
zero contributes ``-inf`` and a factor of ``+inf`` contributes ``+inf``; both
short-circuit the scan.

Finite horizons cannot decide convergence, so each scan combines four tests:

* a Cauchy window over the last :data:`WINDOW` log-partials,
* floor / ceiling thresholds for decay to zero and growth to infinity,
* a doubling-block drift test (``L[2^j] - L[2^(j-1)]`` not shrinking) that
  catches harmonic-type divergence long before a threshold is reached,
* an envelope test at the horizon separating a decaying alternation (which
  converges, and is reported through the window mean) from a persistent one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DomainError, TailUnspecifiedError

WINDOW = 16
DEFAULT_TOL = 1e-10
DEFAULT_MAX_TERMS = 10**6

CONSTANT_ONE = "constant_one"
CLOSED_FORM = "closed_form"
TRUNCATED = "truncated"
TAIL_KINDS = (CONSTANT_ONE, CLOSED_FORM, TRUNCATED)

CONVERGED = "converged"
ZERO = "zero"
INFINITE = "infinite"
OSCILLATING = "oscillating"

ORDINARY = "ordinary"
STANDARD = "standard"

# drift test: successive doubling-block increments must not shrink faster than this
_DRIFT_RATIO = 0.9
_FIRST_DRIFT_EXPONENT = 10
# envelope test: the oscillation band must shrink at least this much from N/2 to N
_ENVELOPE_RATIO = 0.75
_FIRST_CHUNK = 1024
_MAX_CHUNK = 1 << 16


@dataclass(frozen=True)
class FactorSeq:
    """A sequence of non-negative extended-real factors, indexed from 1.

    Supply either ``factor`` (k -> beta_k) or ``log_factor`` (k -> ln beta_k).
    The log form avoids underflow for factors like ``exp(-2**20)``. With
    ``vectorized=True`` the callable receives an integer numpy array.
    """

    factor: Callable | None = None
    log_factor: Callable | None = None
    tail: str = CLOSED_FORM
    depth: int = 0
    vectorized: bool = False

    def __post_init__(self):
        if (self.factor is None) == (self.log_factor is None):
            raise DomainError("give exactly one of factor or log_factor")
        if self.tail not in TAIL_KINDS:
            raise DomainError(f"unknown tail kind {self.tail!r}")
        if self.tail != CLOSED_FORM and self.depth < 0:
            raise DomainError("depth must be non-negative")

    @classmethod
    def from_values(cls, values: Sequence[float], tail: str = CONSTANT_ONE) -> "FactorSeq":
        """Finite list of factors followed by ones (or nothing, if truncated)."""
        arr = np.asarray(values, dtype=float)
        if tail == CLOSED_FORM:
            raise DomainError("a finite list cannot have a closed-form tail")
        return cls(factor=lambda k: arr[k - 1], tail=tail, depth=len(arr), vectorized=True)

    @classmethod
    def periodic(cls, values: Sequence[float]) -> "FactorSeq":
        """The infinite repetition of ``values``."""
        arr = np.asarray(values, dtype=float)
        return cls(factor=lambda k: arr[(k - 1) % len(arr)], vectorized=True)

    def _call(self, fn, idx):
        if self.vectorized:
            return np.broadcast_to(np.asarray(fn(idx), dtype=float), idx.shape).astype(float)
        return np.fromiter((fn(int(k)) for k in idx), dtype=float, count=len(idx))

    def logs(self, start: int, stop: int) -> np.ndarray:
        """ln beta_k for k in [start, stop)."""
        if start < 1:
            raise DomainError("indices are 1-based")
        idx = np.arange(start, max(start, stop), dtype=np.int64)
        if self.tail == TRUNCATED and len(idx) and idx[-1] > self.depth:
            raise TailUnspecifiedError(
                f"factor {int(idx[-1])} requested but sequence is truncated at {self.depth}"
            )
        out = np.zeros(len(idx))
        live = idx <= self.depth if self.tail == CONSTANT_ONE else np.ones(len(idx), bool)
        if not live.any():
            return out
        k = idx[live]
        if self.log_factor is not None:
            vals = self._call(self.log_factor, k)
            if np.isnan(vals).any():
                raise DomainError("log factor is NaN")
        else:
            beta = self._call(self.factor, k)
            if np.isnan(beta).any() or (beta < 0).any():
                bad = int(k[np.argmax(np.isnan(beta) | (beta < 0))])
                raise DomainError(f"factor {bad} is negative or NaN")
            with np.errstate(divide="ignore"):
                vals = np.log(beta)
        out[live] = vals
        return out


@dataclass(frozen=True)
class GroupingAlpha:
    """Block sizes ``prefix`` followed by blocks of size ``repeat`` forever.

    Blocks are 1-based: block k covers coordinates ``start(k) .. stop(k) - 1``.
    ``GroupingAlpha()`` is the trivial grouping (1, 1, 1, ...).
    """

    prefix: tuple[int, ...] = ()
    repeat: int = 1

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(n) for n in self.prefix))
        if any(n < 1 for n in self.prefix) or self.repeat < 1:
            raise DomainError("block sizes must be positive integers")

    @classmethod
    def parse(cls, text: str) -> "GroupingAlpha":
        """'2,1' means (2, 1, 1, 1, ...): the last entry repeats."""
        sizes = [int(s) for s in text.split(",") if s.strip()]
        if not sizes:
            return cls()
        return cls(tuple(sizes[:-1]), sizes[-1])

    def size(self, k: int) -> int:
        return self.prefix[k - 1] if k <= len(self.prefix) else self.repeat

    def starts(self, k: np.ndarray) -> np.ndarray:
        """First coordinate of each block in the integer array ``k``."""
        k = np.asarray(k, dtype=np.int64)
        cum = np.concatenate([[0], np.cumsum(self.prefix, dtype=np.int64)])
        p = len(self.prefix)
        inside = np.minimum(k - 1, p)
        return cum[inside] + np.maximum(k - 1 - p, 0) * self.repeat + 1

    def block_range(self, k: int) -> range:
        s = int(self.starts(np.array([k]))[0])
        return range(s, s + self.size(k))

    def block_of(self, coord: int) -> int:
        """Index of the block containing 1-based coordinate ``coord``."""
        cum = 0
        for k, n in enumerate(self.prefix, start=1):
            cum += n
            if coord <= cum:
                return k
        return len(self.prefix) + -(-(coord - cum) // self.repeat)

    def covered(self, blocks: int) -> int:
        """Number of coordinates in the first ``blocks`` blocks."""
        if blocks <= 0:
            return 0
        return int(self.starts(np.array([blocks + 1]))[0]) - 1


@dataclass(frozen=True)
class ProductResult:
    """Outcome of an infinite-product evaluation.

    ``value`` is None only when oscillating. ``log_value`` is the log of the
    reported value (``-inf`` for zero, ``inf`` for infinite).
    """

    status: str
    value: float | None
    partials_inspected: int
    log_value: float | None = None

    @property
    def is_converged(self) -> bool:
        return self.status == CONVERGED


class _Partials:
    """Growing buffer of compensated partial sums; index 0 holds the empty sum."""

    def __init__(self):
        self.buf = np.zeros(_FIRST_CHUNK + 1)
        self.n = 0
        self._chunk_sums: list[float] = []

    def push(self, terms: np.ndarray) -> None:
        need = self.n + len(terms) + 1
        if need > len(self.buf):
            grown = np.zeros(max(need, 2 * len(self.buf)))
            grown[: self.n + 1] = self.buf[: self.n + 1]
            self.buf = grown
        carry = math.fsum(self._chunk_sums)
        self.buf[self.n + 1 : need] = np.cumsum(terms) + carry
        self._chunk_sums.append(math.fsum(terms))
        self.n += len(terms)

    @property
    def values(self) -> np.ndarray:
        return self.buf[: self.n + 1]


def _chunks(seq: FactorSeq, max_terms: int):
    n, size = 0, _FIRST_CHUNK
    while n < max_terms:
        count = min(size, max_terms - n)
        yield n, seq.logs(n + 1, n + count + 1)
        n += count
        size = min(2 * size, _MAX_CHUNK)


def _first_nonfinite(logs: np.ndarray) -> int | None:
    bad = ~np.isfinite(logs)
    return int(np.argmax(bad)) if bad.any() else None


def _window_value(L: np.ndarray, n: int) -> float:
    """Mean of the last window when the increments alternate, else the last partial."""
    lo = max(n - WINDOW, 0)
    incr = np.diff(L[lo : n + 1])
    signs = np.sign(incr[incr != 0])
    if len(signs) > 1 and (signs != signs[0]).any():
        return float(math.fsum(L[lo + 1 : n + 1]) / (n - lo))
    return float(L[n])


def _window_hits(L, lo, hi, tol, floor, ceil):
    """First n in [lo, hi] at which a window test fires, as (n, kind) or None."""
    lo = max(lo, WINDOW)
    if lo > hi:
        return None
    d = np.diff(L[lo - WINDOW : hi + 1])
    steps = sliding_window_view(d, WINDOW)
    span = np.abs(L[lo : hi + 1] - L[lo - WINDOW : hi + 1 - WINDOW])
    cauchy = (np.abs(steps).max(axis=1) < tol) & (span < tol)
    wins = sliding_window_view(L[lo - WINDOW + 1 : hi + 1], WINDOW)
    below = wins.max(axis=1) < floor
    above = (wins.min(axis=1) > ceil) & (steps.min(axis=1) >= 0)
    hits = []
    for mask, kind in ((cauchy, CONVERGED), (below, ZERO), (above, INFINITE)):
        if mask.any():
            hits.append((lo + int(np.argmax(mask)), kind))
    return min(hits) if hits else None


def _drift(L, lo, hi, tol):
    """First doubling checkpoint 2^j in (lo, hi] where the partials drift steadily.

    Returns (n, sign) with sign -1 for drift to -inf, +1 for +inf, or None.
    """
    j = max(_FIRST_DRIFT_EXPONENT, lo.bit_length())
    while (1 << j) <= hi:
        n = 1 << j
        if n > lo:
            d = [L[1 << (j - i)] - L[1 << (j - i - 1)] for i in (2, 1, 0)]
            same_sign = all(x < 0 for x in d) or all(x > 0 for x in d)
            if (
                same_sign
                and abs(d[2]) > 10 * tol
                and abs(d[2]) >= _DRIFT_RATIO * abs(d[1])
                and abs(d[1]) >= _DRIFT_RATIO * abs(d[0])
            ):
                return n, (-1 if d[2] < 0 else 1)
        j += 1
    return None


def _classify(log_value, n, floor, ceil):
    if log_value < floor:
        return ProductResult(ZERO, 0.0, n, -math.inf)
    if log_value > ceil:
        return ProductResult(INFINITE, math.inf, n, math.inf)
    return ProductResult(CONVERGED, math.exp(log_value), n, log_value)


def _nonfinite_result(value, n):
    if value == -math.inf:
        return ProductResult(ZERO, 0.0, n, -math.inf)
    return ProductResult(INFINITE, math.inf, n, math.inf)


def _check_args(tol, max_terms):
    if not tol > 0:
        raise DomainError("tol must be positive")
    if max_terms < 2:
        raise DomainError("max_terms must be at least 2")


def _horizon(L, N, tol, floor, ceil):
    lo = max(N - WINDOW, 0)
    incr = np.diff(L[lo : N + 1])
    signs = np.sign(incr[incr != 0])
    if len(signs) <= 1 or (signs == signs[0]).all():
        return _classify(float(L[N]), N, floor, ceil)
    end = L[lo + 1 : N + 1]
    g_end = float(np.ptp(end))
    mean_end = _window_value(L, N)
    if g_end <= 10 * tol:
        return _classify(mean_end, N, floor, ceil)
    mid = max(N // 2, WINDOW)
    if mid < N:
        g_mid = float(np.ptp(L[mid - WINDOW + 1 : mid + 1]))
        mean_mid = float(np.mean(L[mid - WINDOW + 1 : mid + 1]))
        if g_end <= _ENVELOPE_RATIO * g_mid and abs(mean_end - mean_mid) <= g_mid:
            return _classify(mean_end, N, floor, ceil)
    return ProductResult(OSCILLATING, None, N, None)


def _ordinary(seq, tol, max_terms, floor, ceil):
    if seq.tail == CONSTANT_ONE and seq.depth <= max_terms:
        logs = seq.logs(1, seq.depth + 1)
        i = _first_nonfinite(logs)
        if i is not None:
            return _nonfinite_result(logs[i], i + 1)
        return _classify(math.fsum(logs), seq.depth, floor, ceil)
    L = _Partials()
    for start, logs in _chunks(seq, max_terms):
        i = _first_nonfinite(logs)
        if i is not None:
            return _nonfinite_result(logs[i], start + i + 1)
        L.push(logs)
        vals = L.values
        hit = _window_hits(vals, start + 1, L.n, tol, floor, ceil)
        drift = _drift(vals, start, L.n, tol)
        if drift is not None and (hit is None or drift[0] < hit[0]):
            n, sign = drift
            return _nonfinite_result(-math.inf if sign < 0 else math.inf, n)
        if hit is not None:
            n, kind = hit
            if kind == CONVERGED:
                return _classify(_window_value(vals, n), n, floor, ceil)
            return _nonfinite_result(-math.inf if kind == ZERO else math.inf, n)
    return _horizon(L.values, L.n, tol, floor, ceil)


def _standard(seq, tol, max_terms):
    neg_floor, pos_ceil = -1.0 / tol, 1.0 / tol
    if seq.tail == CONSTANT_ONE and seq.depth <= max_terms:
        logs = seq.logs(1, seq.depth + 1)
        if (logs == -math.inf).any():
            return _nonfinite_result(-math.inf, int(np.argmax(logs == -math.inf)) + 1)
        if (logs == math.inf).any():
            return _nonfinite_result(math.inf, int(np.argmax(logs == math.inf)) + 1)
        if math.fsum(logs[logs < 0]) < neg_floor:
            return _nonfinite_result(-math.inf, seq.depth)
        if math.fsum(logs[logs > 0]) > pos_ceil:
            return _nonfinite_result(math.inf, seq.depth)
        return _classify(math.fsum(logs), seq.depth, -math.inf, math.inf)
    S, neg, pos = _Partials(), _Partials(), _Partials()
    for start, logs in _chunks(seq, max_terms):
        i = _first_nonfinite(logs)
        if i is not None:
            return _nonfinite_result(logs[i], start + i + 1)
        S.push(logs)
        neg.push(np.minimum(logs, 0.0))
        pos.push(np.maximum(logs, 0.0))
        region = slice(start + 1, S.n + 1)
        crossed_neg = neg.values[region] < neg_floor
        crossed_pos = pos.values[region] > pos_ceil
        events = []
        if crossed_neg.any():
            events.append((start + 1 + int(np.argmax(crossed_neg)), 0, -1))
        if crossed_pos.any():
            events.append((start + 1 + int(np.argmax(crossed_pos)), 1, 1))
        d_neg = _drift(neg.values, start, S.n, tol)
        if d_neg is not None:
            events.append((d_neg[0], 0, -1))
        d_pos = _drift(pos.values, start, S.n, tol)
        if d_pos is not None:
            events.append((d_pos[0], 1, 1))
        hit = _window_hits(S.values, start + 1, S.n, tol, -math.inf, math.inf)
        if hit is not None and hit[1] == CONVERGED:
            events.append((hit[0], 2, 0))
        if events:
            n, _, sign = min(events)
            if sign == 0:
                return _classify(_window_value(S.values, n), n, -math.inf, math.inf)
            return _nonfinite_result(-math.inf if sign < 0 else math.inf, n)
    N = S.n
    return _classify(_window_value(S.values, N), N, -math.inf, math.inf)


def ordinary_product(
    f: FactorSeq,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    *,
    log_floor: float | None = None,
    log_ceiling: float | None = None,
) -> ProductResult:
    """Limit of the partial products ``beta_1 * ... * beta_n``.

    A converged value at or below ``tol`` is reported as zero, and partials
    staying above ``1/tol`` while increasing are reported as infinite. Callers
    working purely in log space (measures of tiny boxes) can move those
    thresholds with ``log_floor`` / ``log_ceiling``.
    """
    _check_args(tol, max_terms)
    floor = math.log(tol) if log_floor is None else log_floor
    ceil = -math.log(tol) if log_ceiling is None else log_ceiling
    return _ordinary(f, tol, max_terms, floor, ceil)


def standard_product(
    f: FactorSeq, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS
) -> ProductResult:
    """``exp(sum ln beta_i)``, or zero when the negative part of the sum diverges.

    Divergence of either signed part is detected by crossing ``-1/tol`` or
    ``1/tol`` or by the doubling drift test. Since a non-divergent run means
    both parts converge, the signed sum converges absolutely and this
    function never reports ``oscillating``.
    """
    _check_args(tol, max_terms)
    return _standard(f, tol, max_terms)


def block_factors(f: FactorSeq, alpha: GroupingAlpha) -> FactorSeq:
    """The sequence of block products ``prod_{i in F_k} beta_i`` in log form."""

    def block_logs(k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        starts = alpha.starts(k)
        stops = alpha.starts(k + 1)
        lo, hi = int(starts.min()), int(stops.max())
        logs = f.logs(lo, hi)
        if len(k) == 1:
            return np.array([math.fsum(logs)])
        # reduceat over contiguous ascending blocks; ordered reduction
        sums = np.add.reduceat(logs, starts - lo)
        # -inf and +inf inside one block: 0 * inf is indeterminate
        if np.isnan(sums).any():
            raise DomainError("block contains both a zero and an infinite factor")
        return sums

    if f.tail == CONSTANT_ONE:
        depth = alpha.block_of(f.depth) if f.depth > 0 else 0
    elif f.tail == TRUNCATED:
        depth = alpha.block_of(f.depth + 1) - 1 if f.depth > 0 else 0
    else:
        depth = 0
    return FactorSeq(log_factor=block_logs, tail=f.tail, depth=depth, vectorized=True)


def grouped_product(
    f: FactorSeq,
    alpha: GroupingAlpha,
    mode: str = ORDINARY,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    **thresholds,
) -> ProductResult:
    """Ordinary or standard product of the block factors of ``f`` under ``alpha``."""
    blocks = block_factors(f, alpha)
    if mode == ORDINARY:
        return ordinary_product(blocks, tol, max_terms, **thresholds)
    if mode == STANDARD:
        return standard_product(blocks, tol, max_terms)
    raise DomainError(f"unknown mode {mode!r}")
