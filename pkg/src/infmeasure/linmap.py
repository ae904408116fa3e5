"""Block-diagonal linear maps of R^infinity and the change-of-variables law.

A map acts by square blocks on consecutive coordinate groups and is the
identity beyond the listed blocks. Image measures are computed directly only
when every block is monomial (one non-zero entry per row and column: diagonal
and signed permutation matrices), because only then is the image of a
rectangle again a rectangle. For other blocks the law
mu_alpha(T(E)) = prod |det T_i| * mu_alpha(E) is the prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .products import GroupingAlpha
from .rect import IntervalSeq, MeasureValue, rect_measure

MAX_BLOCK = 16
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BlockLinearMap:
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(np.atleast_2d(np.asarray(b, dtype=float)) for b in self.blocks)
        for i, b in enumerate(blocks, start=1):
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise DomainError(f"block {i} is not square")
            if b.shape[0] > MAX_BLOCK:
                raise DomainError(f"block {i} exceeds {MAX_BLOCK}x{MAX_BLOCK}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    @property
    def width(self) -> int:
        return sum(self.sizes)

    def compose(self, inner: "BlockLinearMap") -> "BlockLinearMap":
        """self after inner, blockwise; both must share the block structure."""
        if self.sizes != inner.sizes:
            raise DomainError("block structures differ")
        return BlockLinearMap(tuple(a @ b for a, b in zip(self.blocks, inner.blocks)))

    def apply(self, x: Sequence[float]) -> np.ndarray:
        """Image of a cylinder point."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(max(len(x), self.width))
        out[: len(x)] = x
        pos = 0
        for b in self.blocks:
            n = b.shape[0]
            out[pos : pos + n] = b @ out[pos : pos + n]
            pos += n
        return out

    def alpha(self) -> GroupingAlpha:
        """The grouping whose leading blocks match this map, followed by singletons."""
        return GroupingAlpha(self.sizes, 1)


@dataclass(frozen=True)
class JacobianProduct:
    determinants: tuple[float, ...]
    log_product: float

    @property
    def product(self) -> float:
        return math.exp(self.log_product)


def block_determinants(m: BlockLinearMap) -> JacobianProduct:
    """Per-block determinants (LAPACK LU with partial pivoting) and sum of ln|det|."""
    dets, logs = [], []
    for i, b in enumerate(m.blocks, start=1):
        sign, logdet = np.linalg.slogdet(b)
        n = b.shape[0]
        scale = np.abs(b).max() if b.size else 0.0
        if sign == 0 or scale == 0 or logdet < math.log(SINGULAR_RTOL) + n * math.log(scale):
            raise DomainError(f"block {i} is singular")
        dets.append(float(sign * math.exp(logdet)))
        logs.append(float(logdet))
    return JacobianProduct(tuple(dets), math.fsum(logs))


def _is_monomial(b: np.ndarray) -> bool:
    nz = b != 0
    return bool((nz.sum(axis=0) == 1).all() and (nz.sum(axis=1) == 1).all())


def _check_alpha(m: BlockLinearMap, alpha: GroupingAlpha):
    for i, n in enumerate(m.sizes, start=1):
        if alpha.size(i) != n:
            raise DomainError(f"block {i} has size {n} but alpha has {alpha.size(i)}")


def image_rectangle(m: BlockLinearMap, e: IntervalSeq) -> IntervalSeq:
    """T(E) for monomial blocks: output coordinate i takes input coordinate j scaled by b[i, j]."""
    depth = max(e.depth, m.width)
    coords = [e.interval(k) for k in range(1, depth + 1)]
    scale = np.ones(depth)
    source = np.arange(depth)
    pos = 0
    for b in m.blocks:
        if not _is_monomial(b):
            raise DomainError("image of a rectangle is a rectangle only for monomial blocks")
        n = b.shape[0]
        for i in range(n):
            j = int(np.flatnonzero(b[i])[0])
            source[pos + i] = pos + j
            scale[pos + i] = b[i, j]
        pos += n
    new = []
    for i in range(depth):
        a, bb = coords[source[i]]
        s = scale[i]
        new.append(tuple(sorted((s * a, s * bb))))
    # side logs of the image are ln|scale| + the source side log, never ln(scale * side)
    base = e.side_logs
    src = source.copy()
    shift = np.log(np.abs(scale))

    def log_length(k):
        k = np.asarray(k, dtype=np.int64)
        kk = k.copy()
        inside = k <= depth
        kk[inside] = src[k[inside] - 1] + 1
        out = np.array(base(kk), dtype=float, copy=True)
        out[inside] += shift[k[inside] - 1]
        return out

    return IntervalSeq(tuple(new), e.tail, e.lower, e.upper, log_length, e.name)


@dataclass(frozen=True)
class ChangeOfVariables:
    """Both sides of the law: direct image measure (None if not computable) and prediction."""

    direct: MeasureValue | None
    predicted: MeasureValue
    jacobian: JacobianProduct

    @property
    def gap(self) -> float | None:
        if self.direct is None:
            return None
        if self.direct.log_value == self.predicted.log_value:
            return 0.0
        return abs(self.direct.log_value - self.predicted.log_value)


def change_of_variables(
    m: BlockLinearMap, e: IntervalSeq, alpha: GroupingAlpha | None = None
) -> ChangeOfVariables:
    alpha = alpha or m.alpha()
    _check_alpha(m, alpha)
    jac = block_determinants(m)
    base = rect_measure(e, alpha)
    predicted = MeasureValue(base.log_value + jac.log_product, base.status)
    direct = None
    if all(_is_monomial(b) for b in m.blocks):
        direct = rect_measure(image_rectangle(m, e), alpha)
    return ChangeOfVariables(direct, predicted, jac)


def map_rectangle_measure(
    m: BlockLinearMap, e: IntervalSeq, alpha: GroupingAlpha | None = None, atol: float = 1e-9
) -> MeasureValue:
    """mu_alpha(T(E)): computed directly for monomial blocks, predicted otherwise.

    For monomial blocks the direct value is checked against the prediction and
    an ArithmeticError is raised if they differ by more than ``atol`` in log space.
    """
    cov = change_of_variables(m, e, alpha)
    if cov.direct is None:
        return cov.predicted
    if cov.gap > atol:
        raise ArithmeticError(
            f"direct log measure {cov.direct.log_value} != predicted {cov.predicted.log_value}"
        )
    return cov.direct


def baker_special_case(nmat, e: IntervalSeq) -> MeasureValue:
    """A single n x n block followed by identities, grouped as (n, 1, 1, ...)."""
    block = np.atleast_2d(np.asarray(nmat, dtype=float))
    m = BlockLinearMap((block,))
    return map_rectangle_measure(m, e, GroupingAlpha((block.shape[0],), 1))
