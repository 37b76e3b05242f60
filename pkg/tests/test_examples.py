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

from src.dual import value
from src.errors import ExampleError
from src.examples import (
    attitude,
    body_rates,
    left_frame,
    list_suites,
    make_example,
    vertical_axis,
)
from src.models import example_names


def test_unknown_example():
    with pytest.raises(ExampleError, match="unknown example"):
        make_example("nosuch")


def test_unknown_parameter():
    with pytest.raises(ExampleError, match="unknown parameters"):
        make_example("disk", {"mass": 1.0})
    with pytest.raises(ExampleError):
        make_example("particle", {"m": 1.0})


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_parameters_must_be_positive(bad):
    with pytest.raises(ExampleError, match="positive"):
        make_example("disk", {"R": bad})


def test_snakeboard_needs_positive_definite_metric():
    with pytest.raises(ExampleError, match="m r\\^2 > J"):
        make_example("snakeboard", {"J": 2.0})


def test_parameters_override_defaults():
    bundle = make_example("disk", {"m": 3.0})
    assert bundle.parameters == {"m": 3.0, "R": 1.0, "I": 2.0, "J": 1.0}


@pytest.mark.parametrize(
    "name, expected",
    [
        ("particle", ["jacobiator", "jk", "lambda", "psi", "casimir", "dynamics", "twisted", "gauge"]),
        (
            "particle_chaplygin",
            ["jacobiator", "jk", "lambda", "psi", "dynamics", "twisted", "bates_sniatycki"],
        ),
        ("disk", ["jacobiator", "jk", "lambda", "psi", "casimir", "dynamics", "twisted"]),
        ("ball_rank0", ["jacobiator", "jk", "lambda", "psi", "casimir", "dynamics", "twisted"]),
        ("ball_rank2", ["jacobiator", "jk", "lambda", "psi", "casimir", "dynamics", "twisted", "gauge"]),
    ],
)
def test_list_suites(name, expected):
    assert list_suites(make_example(name)) == expected


@pytest.mark.parametrize("name", example_names)
def test_bundles_are_consistent(name):
    bundle = make_example(name)
    assert bundle.x0.shape == (bundle.display.dim,)
    assert bundle.initial_state().shape == (bundle.phase.M.dim,)
    assert set(bundle.conserved) <= set(bundle.monitors)
    for field in bundle.expected.values():
        assert field.role in ("display", "base", "base0")
    x = bundle.initial_state()
    back = value(bundle.from_display(value(bundle.to_display(x))))
    assert np.allclose(back, x)


@pytest.mark.parametrize("q", [[0.3, 1.0, 0.7], [2.0, 0.4, 5.0], [0.0, 2.5, 1.2]])
def test_euler_angle_frames(q):
    q = np.array(q + [0.0, 0.0, 0.0])
    g = np.asarray(attitude(q))
    L = np.asarray(body_rates(q))
    assert np.allclose(g @ g.T, np.eye(3))
    assert np.allclose(vertical_axis(q), g[2])
    assert np.allclose(L[:, 0], g[2])
    assert np.allclose(L @ np.asarray(left_frame(q)).T, np.eye(3))


def test_particle_expected_momentum():
    bundle = make_example("particle")
    d = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
    assert np.allclose(bundle.expected["J"].fn(d), [2.0, 2.0])
    assert np.allclose(bundle.expected["nh_pairing"].fn(d), [4.0, 0.0])


def test_ball_momentum_conserved_quantity_is_k_dot_gamma():
    bundle = make_example("ball_rank1")
    x = bundle.initial_state()
    d = bundle.x0
    expected = float(np.asarray(vertical_axis(d[:3])) @ d[6:])
    assert np.isclose(value(bundle.monitors["K.gamma"](x)), expected)
