"""
Copyright (C) 2024 Michael Piazza

This file is part of Nonholo.

Nonholo is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

Nonholo is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with Nonholo.  If not, see <https://www.gnu.org/licenses/>.
"""

import numpy as np
import pytest

from src.calculus import (
    Chart,
    KForm,
    ScalarField,
    SmoothMap,
    VectorField,
    canonical_bivector,
    coordinate_form,
    derivative_agreement,
    differential,
    evaluate_form,
    exterior_derivative,
    interior,
    jacobiator,
    jacobiator_cyclic,
    jacobian,
    kvector_from_dense,
    PointMemo,
    lie_bracket,
    pullback,
    sharp,
    wedge,
)
from src.config import config
from src.dual import Dual, cos, sin, stack, value
from src.errors import ChartError, DerivativeError

PLANE = Chart("plane", ("x", "y"), ((-1.0, 1.0), (-1.0, 1.0)))
GAUGE_CHART = Chart("xyp", ("x", "y", "p1", "p2"), ((-1.0, 1.0),) * 4)
SPACE = Chart("space", ("x", "y", "z"), ((-1.0, 1.0),) * 3)


def example_bivector():
    """a ∂x∧∂p1 + ∂y∧∂p2 - ab ∂p1∧∂p2 with a = 2 + sin x, b = 1 + y²."""

    def dense(x):
        a = 2.0 + sin(x[0])
        b = 1.0 + x[1] * x[1]
        zero = 0.0 * x[0]
        one = zero + 1.0
        rows = [
            [zero, zero, a, zero],
            [zero, zero, zero, one],
            [-a, zero, zero, -a * b],
            [zero, -one, a * b, zero],
        ]
        return stack([stack(row) for row in rows])

    return kvector_from_dense(GAUGE_CHART, 2, dense)


def test_chart_rejects_mismatched_box():
    with pytest.raises(ChartError):
        Chart("bad", ("x", "y"), ((0.0, 1.0),))


def test_chart_rejects_short_periodic_range():
    with pytest.raises(ChartError):
        Chart("bad", ("phi",), ((0.0, 1.0),), periodic=(True,))


def test_check_point_rejects_wrong_shape():
    with pytest.raises(ChartError):
        PLANE.check_point(np.zeros(3))


def test_sampling_is_deterministic():
    a = PLANE.sample(np.random.default_rng(3), 5)
    b = PLANE.sample(np.random.default_rng(3), 5)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0)


@pytest.mark.parametrize("mode", ["dual", "fd"])
def test_d_squared_vanishes(mode):
    f = ScalarField(PLANE, lambda x: sin(x[0]) * x[1] * x[1] + cos(x[1]))
    ddf = exterior_derivative(differential(f))
    with config.override(derivative_mode=mode):
        for x in PLANE.sample(np.random.default_rng(1), 4):
            assert np.max(np.abs(value(ddf(x)))) < 1e-6


def test_differential_matches_gradient():
    f = ScalarField(PLANE, lambda x: x[0] * x[0] * x[1])
    df = differential(f)
    assert np.allclose(value(df(np.array([0.5, 2.0]))), [2.0, 0.25])


def test_wedge_of_coordinate_forms():
    dx, dy = coordinate_form(PLANE, 0), coordinate_form(PLANE, 1)
    area = wedge(dx, dy)
    assert np.allclose(value(area(np.zeros(2))), [1.0])
    assert np.allclose(value(wedge(dy, dx)(np.zeros(2))), [-1.0])
    assert np.allclose(value(wedge(dx, dx)(np.zeros(2))), [0.0])


def test_interior_and_evaluation():
    area = wedge(coordinate_form(PLANE, 0), coordinate_form(PLANE, 1))
    X = VectorField(PLANE, lambda x: np.array([2.0, 3.0]))
    assert np.allclose(value(interior(X, area)(np.zeros(2))), [-3.0, 2.0])
    u, v = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert np.isclose(value(evaluate_form(area, [u, v], np.zeros(2))), 1.0)


def test_pullback_of_area_under_polar_map():
    polar = Chart("polar", ("r", "t"), ((0.5, 2.0), (-1.0, 1.0)))
    F = SmoothMap(polar, PLANE, lambda x: x[0] * np.array([1.0, 0.0]) * cos(x[1]) + x[0] * np.array([0.0, 1.0]) * sin(x[1]))
    area = wedge(coordinate_form(PLANE, 0), coordinate_form(PLANE, 1))
    pulled = pullback(F, area)
    assert np.allclose(value(pulled(np.array([1.5, 0.3]))), [1.5])


def test_pullback_commutes_with_d():
    polar = Chart("polar", ("r", "t"), ((0.5, 2.0), (-1.0, 1.0)))
    F = SmoothMap(polar, PLANE, lambda x: x[0] * np.array([1.0, 0.0]) * cos(x[1]) + x[0] * np.array([0.0, 1.0]) * sin(x[1]))
    alpha = KForm(PLANE, 1, lambda x: np.array([0.0, 1.0]) * x[0] * x[0] + np.array([1.0, 0.0]) * x[1])
    point = np.array([1.2, 0.4])
    left = value(exterior_derivative(pullback(F, alpha))(point))
    right = value(pullback(F, exterior_derivative(alpha))(point))
    assert np.allclose(left, right, atol=1e-10)


def test_lie_bracket_of_rotation_and_translation():
    rotation = VectorField(PLANE, lambda x: np.array([0.0, 1.0]) * x[0] - np.array([1.0, 0.0]) * x[1])
    translation = VectorField(PLANE, lambda x: np.array([1.0, 0.0]))
    bracket = lie_bracket(translation, rotation)
    assert np.allclose(value(bracket(np.array([0.3, 0.7]))), [0.0, 1.0])


def test_sharp_convention():
    pi = canonical_bivector(PLANE, [(0, 1)])
    X = sharp(pi, coordinate_form(PLANE, 0))
    assert np.allclose(value(X(np.zeros(2))), [0.0, 1.0])


def test_canonical_jacobiator_vanishes():
    chart = Chart("q4", ("q1", "q2", "p1", "p2"), ((-1.0, 1.0),) * 4)
    pi = canonical_bivector(chart, [(0, 2), (1, 3)])
    assert np.max(np.abs(value(jacobiator(pi)(np.zeros(4))))) == 0.0


def twisted_bivector():
    """∂x∧∂y - x ∂x∧∂z: {y, {z, x}} = -1 and the other terms vanish."""

    def dense(x):
        zero = 0.0 * x[0]
        one = zero + 1.0
        return stack(
            [
                stack([zero, one, -x[0]]),
                stack([-one, zero, zero]),
                stack([x[0], zero, zero]),
            ]
        )

    return kvector_from_dense(SPACE, 2, dense)


def test_gauge_example_bivector_is_poisson():
    pi = example_bivector()
    for x in GAUGE_CHART.sample(np.random.default_rng(5), 3):
        assert np.max(np.abs(value(jacobiator(pi).dense(x)))) < 1e-9


def test_jacobiator_of_twisted_bivector():
    pi = twisted_bivector()
    x = np.array([0.2, -0.4, 0.6])
    components = value(jacobiator(pi)(x))
    assert np.allclose(np.abs(components), [1.0])


@pytest.mark.parametrize("mode", ["dual", "fd"])
def test_jacobiator_agrees_with_cyclic_formula(mode):
    with config.override(derivative_mode=mode):
        for pi, chart in [(twisted_bivector(), SPACE), (example_bivector(), GAUGE_CHART)]:
            for x in chart.sample(np.random.default_rng(5), 3):
                fast = value(jacobiator(pi).dense(x))
                slow = value(jacobiator_cyclic(pi).dense(x))
                assert np.allclose(fast, slow, atol=1e-6)



def test_derivative_agreement_is_small():
    pi = example_bivector()
    points = GAUGE_CHART.sample(np.random.default_rng(2), 3)
    assert derivative_agreement(pi.dense, GAUGE_CHART, points) < 1e-4


def test_dense_three_form_from_triple_wedge():
    dx, dy, dz = (coordinate_form(SPACE, i) for i in range(3))
    volume = wedge(wedge(dx, dy), dz).dense(np.zeros(3))
    assert volume.shape == (3, 3, 3)
    assert np.isclose(volume[0, 1, 2], 1.0)
    assert np.isclose(volume[1, 0, 2], -1.0)
    assert np.isclose(volume[2, 0, 1], 1.0)


def test_d_of_two_form_expands_densely():
    B = KForm(SPACE, 2, lambda x: stack([x[2], 0.0 * x[0], 0.0 * x[0]]))
    dB = exterior_derivative(B).dense(np.array([0.1, 0.2, 0.3]))
    assert np.isclose(value(dB)[0, 1, 2], 1.0)


def test_object_array_fields_keep_their_derivative():
    B = KForm(SPACE, 2, lambda x: np.array([x[2], 0, 0]))
    dB = exterior_derivative(B)
    assert np.allclose(value(dB(np.array([0.1, 0.2, 0.3]))), [1.0])


def test_constant_fields_have_zero_derivative():
    e = np.array([1.0, 2.0, 3.0])
    jac = jacobian(lambda x: e, np.zeros(3), SPACE)
    assert jac.shape == (3, 3)
    assert np.all(jac == 0.0)


def test_unliftable_field_output_is_rejected():
    with pytest.raises(DerivativeError):
        jacobian(lambda x: np.array([object(), object()]), np.zeros(3), SPACE)


def test_point_memo_reuses_values_and_separates_seeds():
    calls = []

    def fn(x):
        calls.append(1)
        return x * x

    memo = PointMemo(fn)
    x = np.array([1.0, 2.0])
    memo(x)
    memo(x.copy())
    assert len(calls) == 1 and memo.hits == 1

    seeded = memo(Dual.variable(x))
    assert len(calls) == 2
    assert np.allclose(seeded.grad, np.diag([2.0, 4.0]))
    memo(Dual.variable(x, order=2))
    assert len(calls) == 3


def test_point_memo_tracks_derivative_settings():
    memo = PointMemo(lambda x: x + 1.0)
    x = np.array([0.5])
    memo(x)
    with config.override(derivative_mode="fd"):
        memo(x)
    assert memo.misses == 2


def test_point_memo_is_bounded():
    memo = PointMemo(lambda x: x, maxsize=3)
    for i in range(5):
        memo(np.array([float(i)]))
    memo(np.array([0.0]))
    assert memo.misses == 6
    memo(np.array([4.0]))
    assert memo.hits == 1
