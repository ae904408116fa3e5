"""Continuous functions on R^infinity that depend on finitely many coordinates.

Functions are vectorized: ``f.eval`` receives an array of shape (N, m) whose
column k-1 is coordinate k, and returns N values.

Registry names understood by :func:`get`:

``const_<c>``, ``proj_<k>``, ``cos_<k>``, ``sin_<k>``, ``exp_<k>``, ``sq_<k>``,
``prod_<digits>`` (e.g. ``prod_12`` = x1*x2), ``sum_<digits>``; terms joined by
``+`` are added, and a suffix ``@t1:t2:...`` centres the function at T, i.e.
gives ``x -> f(x - T)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class CylinderFn:
    eval: Callable[[np.ndarray], np.ndarray]
    m: int
    name: str = "f"
    lipschitz: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("effective dimension must be at least 1")

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] < self.m:
            x = np.hstack([x, np.zeros((x.shape[0], self.m - x.shape[1]))])
        return np.asarray(self.eval(x[:, : self.m]), dtype=float).reshape(x.shape[0])

    def at(self, point: Sequence[float]) -> float:
        """Value at a single cylinder point (missing coordinates are zero)."""
        p = np.zeros(max(self.m, len(point)))
        p[: len(point)] = point
        return float(self(p[None, :])[0])

    def __add__(self, other: "CylinderFn") -> "CylinderFn":
        m = max(self.m, other.m)
        return CylinderFn(
            lambda x: self(x) + other(x),
            m,
            f"{self.name}+{other.name}",
            _lip_sum(self.lipschitz, other.lipschitz),
        )

    def scaled(self, c: float) -> "CylinderFn":
        lip = None if self.lipschitz is None else abs(c) * self.lipschitz
        return CylinderFn(lambda x: c * self(x), self.m, f"{c!r}*{self.name}", lip)

    def __rmul__(self, c: float) -> "CylinderFn":
        return self.scaled(c)

    def shifted(self, shift: Sequence[float]) -> "CylinderFn":
        """x -> f(x + shift)."""
        t = np.zeros(self.m)
        head = np.asarray(shift[: self.m], dtype=float)
        t[: len(head)] = head
        return CylinderFn(lambda x: self(x + t), self.m, f"{self.name}(x+T)", self.lipschitz)

    def reflected(self) -> "CylinderFn":
        """x -> f(-x)."""
        return CylinderFn(lambda x: self(-x), self.m, f"{self.name}(-x)", self.lipschitz)


def _lip_sum(a, b):
    return None if a is None or b is None else a + b


def constant(c: float) -> CylinderFn:
    return CylinderFn(lambda x: np.full(x.shape[0], float(c)), 1, f"const_{c:g}", 0.0)


def projection(k: int) -> CylinderFn:
    return CylinderFn(lambda x: x[:, k - 1], k, f"proj_{k}", 1.0)


def _unary(fn, k, name, lip=None):
    return CylinderFn(lambda x: fn(x[:, k - 1]), k, f"{name}_{k}", lip)


def _product(ks: Sequence[int]) -> CylinderFn:
    ks = list(ks)
    return CylinderFn(
        lambda x: np.prod(x[:, [k - 1 for k in ks]], axis=1),
        max(ks),
        "prod_" + "".join(map(str, ks)),
    )


def _sum(ks: Sequence[int]) -> CylinderFn:
    ks = list(ks)
    return CylinderFn(
        lambda x: np.sum(x[:, [k - 1 for k in ks]], axis=1),
        max(ks),
        "sum_" + "".join(map(str, ks)),
        float(len(ks)),
    )


_UNARY = {
    "cos": (np.cos, 1.0),
    "sin": (np.sin, 1.0),
    "exp": (np.exp, None),
    "sq": (np.square, None),
}

_TERM = re.compile(r"^(?P<kind>[a-z]+)_(?P<arg>-?[0-9.eE+-]+)$")


def _term(text: str) -> CylinderFn:
    match = _TERM.match(text)
    if not match:
        raise DomainError(f"unknown function {text!r}")
    kind, arg = match["kind"], match["arg"]
    if kind == "const":
        return constant(float(arg))
    if not arg.isdigit() or "0" in arg:
        raise DomainError(f"bad coordinate list in {text!r}")
    if kind == "proj":
        return projection(int(arg))
    if kind == "prod":
        return _product([int(ch) for ch in arg])
    if kind == "sum":
        return _sum([int(ch) for ch in arg])
    if kind in _UNARY:
        fn, lip = _UNARY[kind]
        return _unary(fn, int(arg), kind, lip)
    raise DomainError(f"unknown function {text!r}")


def get(name: str) -> CylinderFn:
    """Look up (or assemble) a registry function by name."""
    base, _, centre = name.partition("@")
    terms = [t.strip() for t in base.split("+")]
    if not all(terms):
        raise DomainError(f"malformed function name {name!r}")
    f = _term(terms[0])
    for t in terms[1:]:
        f = f + _term(t)
    if centre:
        shift = [-float(v) for v in centre.split(":")]
        f = f.shifted(shift)
    return CylinderFn(f.eval, f.m, name, f.lipschitz)


BUILTIN = ("const_1", "const_7", "proj_1", "proj_2", "prod_12", "sum_12", "cos_1", "exp_1", "sq_1")


def value_at_origin(f: CylinderFn) -> float:
    return f.at([0.0] * f.m)

