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

from src.dual import (
    Dual,
    arccos,
    arctan2,
    concatenate,
    cos,
    einsum,
    sin,
    sqrt,
    stack,
    value,
)


def test_first_derivatives_of_products():
    x = Dual.variable(np.array([0.3, -1.2]))
    f = sin(x[0]) * x[1] * x[1]
    assert np.allclose(f.val, np.sin(0.3) * 1.44)
    assert np.allclose(f.grad, [np.cos(0.3) * 1.44, 2 * np.sin(0.3) * -1.2])


def test_second_derivatives():
    x = Dual.variable(np.array([0.7, 0.2]), order=2)
    f = cos(x[0]) * x[1]
    expected = np.array([[-np.cos(0.7) * 0.2, -np.sin(0.7)], [-np.sin(0.7), 0.0]])
    assert f.hess is not None
    assert np.allclose(f.hess, expected)


def test_sqrt_and_arccos():
    x = Dual.variable(np.array([0.25]))
    assert np.allclose(sqrt(x[0]).grad, [1.0])
    assert np.allclose(arccos(x[0]).grad, [-1 / np.sqrt(1 - 0.0625)])


@pytest.mark.parametrize("angle", [0.1, 1.5, 3.0, -2.8])
def test_arctan2_matches_numpy_across_quadrants(angle):
    x = Dual.variable(np.array([np.cos(angle), np.sin(angle)]) * 2.0)
    theta = arctan2(x[1], x[0])
    assert np.isclose(theta.val, angle)
    # d theta = (x dy - y dx) / r^2
    assert np.allclose(theta.grad, [-np.sin(angle) / 2.0, np.cos(angle) / 2.0])


def test_stack_lifts_constants():
    x = Dual.variable(np.array([2.0]))
    row = stack([x[0], 1.0, 0.0])
    assert row.shape == (3,)
    assert np.allclose(row.grad[:, 0], [1.0, 0.0, 0.0])

    joined = concatenate([np.zeros(2), stack([x[0]])])
    assert np.allclose(value(joined), [0.0, 0.0, 2.0])


def test_einsum_product_rule():
    x = Dual.variable(np.array([1.0, 2.0]))
    A = stack([stack([x[0], x[1]]), stack([x[1], 0.0])])
    v = np.array([3.0, 4.0])
    out = einsum("ij,j->i", A, v)
    assert np.allclose(out.val, [11.0, 6.0])
    assert np.allclose(out.grad, [[3.0, 4.0], [0.0, 3.0]])


def test_einsum_three_operands_matches_numpy():
    rng = np.random.default_rng(0)
    a, b, c = rng.normal(size=(3, 3)), rng.normal(size=(3, 3)), rng.normal(size=3)
    assert np.allclose(einsum("ij,jk,k->i", a, b, c), np.einsum("ij,jk,k->i", a, b, c))


def test_numpy_defers_to_dual():
    x = Dual.variable(np.array([1.0, 2.0]))
    out = np.ones(2) + x
    assert isinstance(out, Dual)
