from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infmeasure.equidist import (
    KINDS,
    RANDOM,
    VAN_DER_CORPUT,
    WEYL,
    CoordSequence,
    coord_points,
    equidist_count,
    equidist_ratio,
    family_average,
    product_family,
    radical_inverse_base2,
)
from infmeasure.errors import BudgetExceededError, DomainError
from infmeasure.functions import get
from infmeasure.rect import DeltaBox, ElementaryRect, unit_cube


def bit_reversal(i):
    # independent oracle: reverse the binary string of i behind the point
    bits = bin(i)[2:][::-1]
    return sum(Fraction(int(b), 2 ** (j + 1)) for j, b in enumerate(bits))


def brute_ratio(fam, u):
    pts = fam.points()
    inside = u.contains(pts, tail=fam.anchor)
    return Fraction(int(inside.sum()), len(pts))


def test_van_der_corput_prefix():
    assert list(coord_points(CoordSequence(), 4)) == [0.5, 0.25, 0.75, 0.125]


def test_radical_inverse_matches_bit_reversal():
    idx = np.arange(1, 300)
    assert [Fraction(v) for v in radical_inverse_base2(idx)] == [bit_reversal(int(i)) for i in idx]


@pytest.mark.parametrize("m", range(1, 11))
def test_van_der_corput_dyadic_halves(m):
    pts = coord_points(CoordSequence(), 2**m)
    assert np.count_nonzero(pts < 0.5) == 2 ** (m - 1)


@pytest.mark.parametrize("kind", KINDS)
def test_degenerate_interval(kind):
    assert (coord_points(CoordSequence(kind, (0.3, 0.3)), 5) == 0.3).all()


@pytest.mark.parametrize("kind", KINDS)
def test_points_inside_interval(kind):
    pts = coord_points(CoordSequence(kind, (-2.0, 5.0), seed=3), 500)
    assert (pts >= -2.0).all() and (pts <= 5.0).all()


def test_unknown_kind():
    with pytest.raises(DomainError):
        CoordSequence("sobol")


def test_family_examples():
    f1 = product_family(unit_cube(), n=1)
    assert f1.size == 1 and f1.points().shape == (1, 1)
    f2 = product_family(unit_cube(), n=2)
    assert {tuple(p) for p in f2.points()} == {(0.5, 0.5), (0.5, 0.25), (0.25, 0.5), (0.25, 0.25)}
    assert f2.coordinate_values(3).tolist() == [0.5]
    f3 = product_family(unit_cube(), n=3)
    pts = f3.points()
    assert len(pts) == 27 and ((pts >= 0) & (pts <= 1)).all()


def test_family_budget():
    with pytest.raises(BudgetExceededError):
        product_family(unit_cube(), n=8)
    assert product_family(unit_cube(), n=8, budget=8**8).size == 8**8
    with pytest.raises(BudgetExceededError):
        product_family(unit_cube(), n=7).points(budget=1000)


def test_family_deterministic():
    for kind in KINDS:
        a = product_family(unit_cube(), kind, 4).points()
        b = product_family(unit_cube(), kind, 4).points()
        assert np.array_equal(a, b)


def test_ratio_examples():
    fam = product_family(unit_cube(), n=4)
    assert equidist_ratio(fam, ElementaryRect(unit_cube(), {})) == 1.0
    assert equidist_ratio(fam, ElementaryRect(unit_cube(), {1: (0.0, 0.5)})) == 0.5


def test_thin_override_ratio_vanishes():
    ratios = []
    for n in (2, 3, 4, 5, 6, 7):
        fam = product_family(unit_cube(), n=n)
        ratios.append(equidist_ratio(fam, ElementaryRect(unit_cube(), {1: (0.0, 1.0 / n**2)})))
    assert ratios[-1] == 0.0


def test_override_beyond_n_uses_anchor():
    fam = product_family(unit_cube(), n=2)
    assert equidist_ratio(fam, ElementaryRect(unit_cube(), {5: (0.4, 0.6)})) == 1.0
    assert equidist_ratio(fam, ElementaryRect(unit_cube(), {5: (0.0, 0.4)})) == 0.0


overrides = st.dictionaries(
    st.integers(1, 6),
    st.tuples(st.floats(0, 0.95), st.floats(0.01, 1.0)).map(lambda t: (t[0], min(1.0, t[0] + t[1]))),
    max_size=3,
)


@settings(max_examples=60, deadline=None)
@given(overrides, st.integers(1, 5), st.sampled_from(KINDS))
def test_factored_ratio_matches_brute_force(ov, n, kind):
    u = ElementaryRect(unit_cube(), ov)
    fam = product_family(unit_cube(), kind, n)
    hits, total = equidist_count(fam, u)
    assert Fraction(hits, total) == brute_ratio(fam, u)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.sampled_from(["proj_1", "cos_1", "prod_12", "sum_12", "exp_1+sq_2"]))
def test_family_average_matches_brute_force(n, name):
    f = get(name)
    fam = product_family(DeltaBox(0.5).as_rect(), WEYL, n)
    pts = fam.points()
    if pts.shape[1] < f.m:
        extra = [np.full(len(pts), fam.coordinate_values(k)[0]) for k in range(pts.shape[1] + 1, f.m + 1)]
        pts = np.column_stack([pts] + extra)
    assert family_average(f, fam) == pytest.approx(float(np.mean(f(pts))), rel=1e-12, abs=1e-15)


def test_average_constant():
    fam = product_family(DeltaBox(0.25).as_rect(), RANDOM, 5)
    assert family_average(get("const_7"), fam) == 7.0


def test_average_vdc_example():
    fam = product_family(unit_cube(), VAN_DER_CORPUT, 4)
    assert family_average(get("proj_1"), fam) == 0.40625
