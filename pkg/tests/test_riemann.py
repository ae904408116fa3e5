import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infmeasure.errors import BudgetExceededError, DomainError
from infmeasure.functions import CylinderFn, get
from infmeasure.rect import DeltaBox, diameter, elementary_measure, rect_measure, unit_cube
from infmeasure.riemann import (
    average_vs_integral,
    box_average,
    darboux,
    grid_partition,
    intermediate_value_point,
    mesh,
    riemann_integral,
)


def test_grid_cells_and_measures():
    p = grid_partition(unit_cube(), 1, 2)
    cells = list(p.cells())
    assert len(cells) == 2
    assert all(elementary_measure(c).value == pytest.approx(0.5, rel=1e-15) for c in cells)
    p = grid_partition(unit_cube(), 2, 3)
    assert p.n_cells == 9
    assert all(elementary_measure(c).value == pytest.approx(1 / 9, rel=1e-14) for c in p.cells())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 8))
def test_cell_measures_sum_to_parent(m, cuts):
    # exact rational widths of the uniform grid
    p = grid_partition(unit_cube(), m, cuts)
    total = Fraction(0)
    for w in np.array(np.meshgrid(*p.weights(), indexing="ij")).reshape(m, -1).T:
        total += math.prod(Fraction(x).limit_denominator(64) for x in w)
    assert total == 1
    assert math.fsum(elementary_measure(c).value for c in p.cells()) == pytest.approx(1.0, rel=1e-13)


def test_grid_budget():
    with pytest.raises(BudgetExceededError):
        grid_partition(unit_cube(), 3, 101)


def test_mesh_examples():
    base = mesh(grid_partition(unit_cube(), 1, 1))
    assert base == pytest.approx(diameter(unit_cube()), abs=1e-15)
    m2 = mesh(grid_partition(unit_cube(), 1, 2))
    m4 = mesh(grid_partition(unit_cube(), 1, 4))
    assert m2 - base == pytest.approx(1 / 6 - 1 / 4, abs=1e-15)
    assert m4 - base == pytest.approx(1 / 10 - 1 / 4, abs=1e-15)
    # refining coordinate 2 instead of 1 halves the change
    second = mesh(grid_partition(unit_cube(), 2, [1, 2]))
    assert second - base == pytest.approx((1 / 6 - 1 / 4) / 2, abs=1e-15)


def test_darboux_examples():
    b = darboux(get("const_7"), grid_partition(unit_cube(), 1, 4))
    assert b.lower == b.upper == 7.0
    b = darboux(get("proj_1"), grid_partition(unit_cube(), 1, 4))
    assert (b.lower, b.upper) == (0.375, 0.625)


def test_darboux_needs_enough_coordinates():
    with pytest.raises(DomainError):
        darboux(get("prod_12"), grid_partition(unit_cube(), 1, 4))


def test_bracket_width_shrinks_like_one_over_cuts():
    widths = []
    for cuts in (2, 4, 8, 16):
        b = darboux(get("cos_1"), grid_partition(unit_cube(), 1, cuts))
        widths.append(b.upper - b.lower)
    for a, b in zip(widths, widths[1:]):
        assert 0.4 <= b / a <= 0.6


@pytest.mark.parametrize(
    "name, expected", [("const_1", 1.0), ("proj_1", 0.5), ("prod_12", 0.25), ("sum_12", 1.0)]
)
def test_integrals(name, expected):
    # two-dimensional brackets close like 1/cuts, so a 1e-4 width needs far more cells than the budget
    tol = 5e-3 if name in ("prod_12", "sum_12") else 1e-4
    assert riemann_integral(get(name), unit_cube(), tol) == pytest.approx(expected, abs=1e-4)


def test_integral_of_cos_closed_form():
    assert riemann_integral(get("cos_1"), unit_cube(), 1e-5) == pytest.approx(math.sin(1.0), abs=1e-5)


def test_integral_scales_with_measure():
    r = unit_cube([(0.0, 2.0), (0.0, 3.0)])
    assert riemann_integral(get("prod_12"), r, 5e-2) == pytest.approx(2 * 3 * 1.0 * 1.5, rel=1e-3)


def test_box_average_budget():
    with pytest.raises(BudgetExceededError):
        box_average(get("prod_12"), unit_cube(), 1e-8, budget=1000)
    est = box_average(get("prod_12"), unit_cube(), 1e-8, budget=1000, strict=False)
    assert not est.converged


def test_zero_measure_rejected():
    with pytest.raises(DomainError):
        riemann_integral(get("proj_1"), unit_cube([(0.2, 0.2)]), 1e-3)


def test_delta_box_average_against_closed_form():
    eps = 0.5
    a = float(DeltaBox(eps).half_width(1))
    est = box_average(get("cos_1"), DeltaBox(eps).as_rect(), 1e-6)
    assert est.value == pytest.approx(math.sin(a) / a, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["proj_1", "cos_1", "sum_12", "exp_1", "sq_1", "prod_12"]), st.integers(1, 6))
def test_darboux_sandwich(name, log_cuts):
    f = get(name)
    b = darboux(f, grid_partition(unit_cube([(-1.0, 2.0)]), f.m, 2**log_cuts // f.m or 1))
    assert b.lower <= b.midpoint <= b.upper


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["proj_1", "sum_12", "exp_1", "prod_12"]), st.integers(1, 5))
def test_refinement_monotone(name, k):
    # coordinate-monotone functions on the positive cube: corner extrema are exact
    f = get(name)
    coarse = darboux(f, grid_partition(unit_cube(), f.m, 2**k // 2 or 1))
    fine = darboux(f, grid_partition(unit_cube(), f.m, 2**k))
    assert fine.lower >= coarse.lower - 1e-15
    assert fine.upper <= coarse.upper + 1e-15


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, beta):
    f, g = get("cos_1"), get("proj_1")
    tol = 1e-4
    combo = alpha * f + beta * g
    lhs = riemann_integral(combo, unit_cube(), tol * max(1.0, abs(alpha) + abs(beta)))
    rhs = alpha * riemann_integral(f, unit_cube(), tol) + beta * riemann_integral(g, unit_cube(), tol)
    assert lhs == pytest.approx(rhs, abs=2 * tol * max(1.0, abs(alpha) + abs(beta)))


def test_step_function_sum_exact():
    # step function with values 1, 3 on the halves of coordinate 1
    step = CylinderFn(lambda x: np.where(x[:, 0] < 0.5, 1.0, 3.0), 1, "step")
    for cuts in (2, 4, 8):
        b = darboux(step, grid_partition(unit_cube(), 1, cuts), samples_per_cell=2)
        assert b.midpoint == 2.0


def test_average_vs_integral_examples():
    avg, ratio = average_vs_integral(get("const_1"), unit_cube(), 3)
    assert avg == ratio == 1.0
    avg, ratio = average_vs_integral(get("proj_1"), unit_cube(), 4)
    assert avg == 0.40625 and ratio == pytest.approx(0.5, abs=1e-4)
    avg, _ = average_vs_integral(get("proj_1"), unit_cube(), 7)
    assert abs(avg - 0.5) < 0.08


def test_intermediate_value_examples():
    r = unit_cube()
    f = get("proj_1")
    assert np.array_equal(intermediate_value_point(f, r, 0.0, [0.0], [1.0]), [0.0])
    c = intermediate_value_point(f, r, 0.3, [0.0], [1.0], tol=1e-12)
    assert c[0] == pytest.approx(0.3, abs=1e-12)
    c = intermediate_value_point(get("sq_1"), r, 0.25, [0.0], [1.0], tol=1e-12)
    assert c[0] == pytest.approx(0.5, abs=1e-12)


def test_intermediate_value_preconditions():
    with pytest.raises(DomainError):
        intermediate_value_point(get("proj_1"), unit_cube(), 2.0, [0.0], [1.0])
    with pytest.raises(DomainError):
        intermediate_value_point(get("proj_1"), unit_cube(), 0.5, [-1.0], [1.0])


def test_measure_of_test_rectangles():
    assert rect_measure(unit_cube([(0.0, 2.0)])).value == pytest.approx(2.0, rel=1e-15)
