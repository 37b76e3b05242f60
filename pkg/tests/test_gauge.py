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
    canonical_bivector,
    coordinate_form,
    exterior_derivative,
    kform_from_dense,
    kvector_from_dense,
    wedge,
)
from src.dual import sin, stack, value
from src.errors import GaugeError
from src.examples import make_example
from src.gauge import (
    check_dynamical_gauge,
    gauge_determinant,
    gauge_transform,
    project_gauge_form,
    twisted_residual,
    w_contraction,
)
from src.mechanics import nh_vector_field

CHART = Chart("xyp", ("x", "y", "p1", "p2"), ((-1.0, 1.0),) * 4)
PLANE = Chart("plane", ("x", "y"), ((-1.0, 1.0), (-1.0, 1.0)))


def coefficients(x):
    return 2.0 + sin(x[0]), 1.0 + x[1] * x[1]


def entries(x, values):
    zero = 0.0 * x[0]
    rows = [[zero] * 4 for _ in range(4)]
    for (i, j), v in values.items():
        rows[i][j] = v
        rows[j][i] = -v
    return stack([stack(row) for row in rows])


def twisted_example():
    """a ∂x∧∂p1 + ∂y∧∂p2 - ab ∂p1∧∂p2."""

    def dense(x):
        a, b = coefficients(x)
        return entries(x, {(0, 2): a, (1, 3): 0.0 * x[0] + 1.0, (2, 3): -a * b})

    return kvector_from_dense(CHART, 2, dense)


def b_form(sign=1.0):
    def dense(x):
        _, b = coefficients(x)
        return entries(x, {(0, 1): sign * b})

    return kform_from_dense(CHART, 2, dense)


def test_gauge_transform_removes_the_cross_term():
    pi_B = gauge_transform(twisted_example(), b_form())
    for x in CHART.sample(np.random.default_rng(0), 5):
        a, _ = coefficients(x)
        expected = np.zeros((4, 4))
        expected[0, 2], expected[2, 0] = a, -a
        expected[1, 3], expected[3, 1] = 1.0, -1.0
        assert np.max(np.abs(value(pi_B.dense(x)) - expected)) <= 1e-12


def test_opposite_gauge_doubles_the_cross_term():
    pi_B = gauge_transform(twisted_example(), b_form(-1.0))
    for x in CHART.sample(np.random.default_rng(1), 5):
        a, b = coefficients(x)
        assert abs(value(pi_B.dense(x))[2, 3] + 2 * a * b) <= 1e-12


def test_gauge_determinant_of_nilpotent_correction_is_one():
    x = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.isclose(gauge_determinant(twisted_example(), b_form(), x), 1.0)


def test_singular_gauge_raises():
    pi = canonical_bivector(PLANE, [(0, 1)])
    B = wedge(coordinate_form(PLANE, 0), coordinate_form(PLANE, 1))
    with pytest.raises(GaugeError) as e:
        gauge_transform(pi, B).dense(np.array([0.2, 0.3]))
    assert str(e.value).startswith("Error:")
    assert "0.2" in str(e.value)


def test_gauge_of_poisson_by_nonclosed_form_is_twisted_by_minus_dB():
    pi0 = canonical_bivector(CHART, [(0, 2), (1, 3)])
    # B = p1 dx∧dy, so π_B = π0 + p1 ∂p1∧∂p2
    B = KForm(CHART, 2, lambda x: np.array([1.0, 0, 0, 0, 0, 0]) * x[2])
    pi_B = gauge_transform(pi0, B)
    points = list(CHART.sample(np.random.default_rng(2), 4))

    residual, closedness = twisted_residual(pi_B, -exterior_derivative(B), points)
    assert residual < 1e-9
    assert closedness == 0.0

    wrong, _ = twisted_residual(pi_B, exterior_derivative(B), points)
    assert wrong > 1.0


def test_closedness_is_reported_for_non_exact_forms():
    pi0 = canonical_bivector(CHART, [(0, 2), (1, 3)])
    phi = KForm(CHART, 3, lambda x: np.array([1.0, 0, 0, 0]) * x[3])
    _, closedness = twisted_residual(pi0, phi, [np.array([0.1, 0.2, 0.3, 0.4])])
    assert closedness > 0.5


def test_projected_gauge_form_kills_the_symmetry_directions():
    phase = make_example("particle").phase
    chart = phase.M
    rng = np.random.default_rng(3)
    M = rng.normal(size=(chart.dim, chart.dim))
    B = kform_from_dense(chart, 2, lambda x: (M - M.T) * (1.0 + 0.0 * x[0]))
    projected = project_gauge_form(B, phase)
    for x in chart.sample(rng, 3):
        assert w_contraction(projected, phase, x) < 1e-10


def test_zero_form_is_a_dynamical_gauge():
    bundle = make_example("particle")
    phase = bundle.phase
    B = KForm(phase.M, 2, lambda x: np.zeros(10))
    points = list(phase.M.sample(np.random.default_rng(4), 3))
    report = check_dynamical_gauge(B, nh_vector_field(phase), points)
    assert report.max_residual == 0.0
    assert report.invertible
