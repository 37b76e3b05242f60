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

from src.calculus import Chart, Frame, KForm, MatrixField, ScalarField, pushed_vector, transported_bivector
from src.dual import sin, stack, value
from src.errors import ConstructionError
from src.examples import make_example
from src.mechanics import (
    MechanicalSystem,
    build_constrained_phase,
    constrained_hamiltonian_field,
    nh_bivector,
    nh_equation_residual,
    nh_hamel_field,
    nh_vector_field,
)


@pytest.fixture(scope="module")
def particle():
    return make_example("particle")


def display_points(bundle, count=4):
    return bundle.display.sample(np.random.default_rng(11), count)


def test_particle_bivector_closed_form(particle):
    pi = nh_bivector(particle.phase)
    shown = transported_bivector(particle.to_display, pi)
    for d in display_points(particle):
        x = np.asarray(value(particle.from_display(d)))
        y, px = d[1], d[3]
        s = 1.0 + y * y
        expected = np.zeros((5, 5))
        for (i, j), v in {(0, 3): 1 / s, (2, 3): y / s, (1, 4): 1.0, (3, 4): -y * px / s}.items():
            expected[i, j], expected[j, i] = v, -v
        assert np.allclose(value(shown(x)), expected, atol=1e-10)


def test_particle_vector_field_in_display_coordinates(particle):
    X = nh_vector_field(particle.phase)
    shown = pushed_vector(particle.to_display, X)
    for d in display_points(particle):
        x = np.asarray(value(particle.from_display(d)))
        y, px, py = d[1], d[3], d[4]
        expected = [px, py, y * px, -y * px * py / (1 + y * y), 0.0]
        assert np.allclose(value(shown(x)), expected, atol=1e-10)


def test_particle_vector_field_matches_lagrange_multipliers(particle):
    phase = particle.phase
    X = nh_vector_field(phase)
    oracle = constrained_hamiltonian_field(phase.system, phase.cotangent)
    pushed = pushed_vector(phase.iota, X)
    for x in phase.M.sample(np.random.default_rng(12), 4):
        assert np.allclose(value(oracle(value(phase.iota(x)))), value(pushed(x)), atol=1e-9)
        assert nh_equation_residual(phase, X, x) < 1e-9


@pytest.mark.parametrize("name", ["disk", "snakeboard", "ball_rank2"])
def test_vector_field_matches_lagrange_multipliers(name):
    phase = make_example(name).phase
    X = nh_vector_field(phase)
    oracle = constrained_hamiltonian_field(phase.system, phase.cotangent)
    pushed = pushed_vector(phase.iota, X)
    for x in phase.M.sample(np.random.default_rng(13), 2):
        expected = value(pushed(x))
        gap = np.max(np.abs(value(oracle(value(phase.iota(x)))) - expected))
        assert gap <= 1e-8 * max(1.0, np.max(np.abs(expected)))


def test_hamiltonian_is_kinetic_energy_in_frame_momenta(particle):
    x = np.array([0.3, 0.5, -0.2, 1.5, -0.5])
    assert np.isclose(value(particle.phase.H(x)), 0.5 * (1.5**2 + 0.5**2))


def test_frame_momenta_of_particle(particle):
    # K_1 = <p, ∂x + y ∂z> = (1 + y²) p_x
    d = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
    x = np.asarray(value(particle.from_display(d)))
    assert np.allclose(value(particle.phase.frame_momenta(x)), [4.0, 1.0])
    back = value(particle.phase.point_from_frame_momenta(x[:3], np.array([4.0, 1.0])))
    assert np.allclose(back, x)


def test_frame_violating_constraints_is_rejected():
    Q = Chart("bad/Q", ("x", "y", "z"), ((-1.0, 1.0),) * 3)
    system = MechanicalSystem(
        name="bad",
        Q=Q,
        kappa=MatrixField(Q, lambda q: np.eye(3)),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=(KForm(Q, 1, lambda q: stack([-q[1], 0.0, 1.0])),),
        frame_D=Frame(Q, 2, lambda q: np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])),
        frame_W=Frame(Q, 1, lambda q: np.array([[0.0, 0.0, 1.0]])),
    )
    with pytest.raises(ConstructionError):
        build_constrained_phase(system)


def test_indefinite_metric_is_rejected():
    Q = Chart("flat/Q", ("x", "y"), ((-1.0, 1.0),) * 2)
    system = MechanicalSystem(
        name="flat",
        Q=Q,
        kappa=MatrixField(Q, lambda q: np.diag([1.0, -1.0])),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=(KForm(Q, 1, lambda q: np.array([0.0, 1.0])),),
        frame_D=Frame(Q, 1, lambda q: np.array([[1.0, 0.0]])),
        frame_W=Frame(Q, 1, lambda q: np.array([[0.0, 1.0]])),
    )
    with pytest.raises(ConstructionError, match="positive definite"):
        build_constrained_phase(system)


@pytest.mark.parametrize("name", ["particle", "disk", "snakeboard", "ball_rank2"])
def test_hamel_field_matches_nh_vector_field(name):
    phase = make_example(name).phase
    X, fast = nh_vector_field(phase), nh_hamel_field(phase)
    for x in phase.M.sample(np.random.default_rng(14), 3):
        expected = value(X(x))
        gap = np.max(np.abs(value(fast(x)) - expected))
        assert gap <= 1e-9 * max(1.0, np.max(np.abs(expected)))


def test_hamel_field_with_potential_and_curved_metric():
    Q = Chart("tilted/Q", ("x", "y", "z"), ((-1.0, 1.0),) * 3)
    system = MechanicalSystem(
        name="tilted",
        Q=Q,
        kappa=MatrixField(Q, lambda q: np.diag([1.0, 2.0, 3.0])),
        potential=ScalarField(Q, lambda q: sin(q[0]) + q[1] * q[2]),
        constraint_forms=(KForm(Q, 1, lambda q: stack([-q[1], 0.0 * q[0], 1.0 + 0.0 * q[0]])),),
        frame_D=Frame(
            Q, 2, lambda q: stack([stack([1.0 + 0.0 * q[0], 0.0 * q[0], q[1]]), np.array([0.0, 1.0, 0.0])])
        ),
        frame_W=Frame(Q, 1, lambda q: np.array([[0.0, 0.0, 1.0]])),
    )
    phase = build_constrained_phase(system)
    X, fast = nh_vector_field(phase), nh_hamel_field(phase)
    for x in phase.M.sample(np.random.default_rng(15), 3):
        assert np.allclose(value(fast(x)), value(X(x)), atol=1e-10)
