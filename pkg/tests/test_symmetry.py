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

from src.calculus import exterior_derivative, zero_form
from src.dual import value
from src.errors import SymmetryError
from src.examples import make_example
from src.mechanics import nh_bivector
from src.symmetry import (
    curvature_identity_residual,
    dj_wedge_k,
    equivariance_residual,
    frame_invariance_residual,
    generator_identity_residual,
    jk_invariance_residual,
    jk_two_form,
    make_lie_data,
    nh_momentum_map,
    psi_trivector,
    semi_basic_residual,
    validate_lie_data,
    verify_jacobiator,
)


@pytest.fixture(scope="module")
def particle():
    return make_example("particle")


def point(bundle, display):
    return np.asarray(value(bundle.from_display(np.asarray(display, dtype=float))))


def test_particle_momentum_map(particle):
    x = point(particle, [0.0, 1.0, 0.0, 2.0, 1.0])
    assert np.allclose(value(particle.structure.J(x))[:, 0], [2.0, 2.0])


def test_particle_nonholonomic_pairing(particle):
    x = point(particle, [0.0, 1.0, 0.0, 2.0, 1.0])
    momentum = nh_momentum_map(particle.structure)
    assert np.isclose(value(momentum.pairing([1.0, 0.0])(x)), 4.0)
    assert np.isclose(value(momentum.pairing([0.0, 1.0])(x)), 0.0)
    # ∂x + y ∂z is tangent to D at y = 1
    assert np.isclose(value(momentum.evaluate(x, [1.0, 1.0])), 4.0)


def test_momentum_map_rejects_elements_outside_the_bundle(particle):
    x = point(particle, [0.0, 1.0, 0.0, 2.0, 1.0])
    with pytest.raises(SymmetryError):
        nh_momentum_map(particle.structure).evaluate(x, [1.0, 0.0])


def test_particle_curvature_and_jk(particle):
    x = point(particle, [0.2, 0.5, -0.3, 1.5, -1.0])
    K = value(particle.structure.K_W.dense(x))
    assert np.allclose(K[0], 0.0, atol=1e-10)
    assert np.isclose(K[1][0, 1], 1.0)
    assert np.isclose(K[1][1, 0], -1.0)
    jk = value(jk_two_form(particle.structure).dense(x))
    assert np.isclose(jk[0, 1], 0.5 * 1.5)


@pytest.mark.parametrize("name", ["particle", "disk", "snakeboard", "ball_rank2"])
def test_structure_identities(name):
    bundle = make_example(name)
    s = bundle.structure
    rng = np.random.default_rng(21)
    for x in bundle.phase.M.sample(rng, 2):
        assert equivariance_residual(s, x) < 1e-8
        assert curvature_identity_residual(s, x) < 1e-8
        assert semi_basic_residual(bundle.phase, x) < 1e-8
        assert jk_invariance_residual(s, x) < 1e-7
        assert frame_invariance_residual(bundle.phase, s.lie, x) < 1e-8
        assert generator_identity_residual(s, x, rng.normal(size=s.lie.dim_g)) < 1e-8


def test_ball_algebra_is_not_abelian():
    lie = make_example("ball_rank1").lie
    assert np.max(np.abs(lie.structure_constants)) > 0.5


def test_structure_constants_need_matching_shape(particle):
    with pytest.raises(SymmetryError, match="shape"):
        make_lie_data(particle.phase, particle.lie.generators_Q, np.zeros((1, 1, 1)), (1,))


def test_non_antisymmetric_structure_constants_are_rejected(particle):
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = 1.0
    lie = make_lie_data(particle.phase, particle.lie.generators_Q, c, (1,))
    with pytest.raises(SymmetryError, match="antisymmetric"):
        validate_lie_data(lie, particle.system, np.zeros((1, 3)))


def test_complement_must_come_from_the_algebra(particle):
    # ∂x alone does not generate the complement ∂z
    lie = make_lie_data(particle.phase, particle.lie.generators_Q, np.zeros((2, 2, 2)), (0,))
    with pytest.raises(SymmetryError, match="vertical symmetry"):
        validate_lie_data(lie, particle.system, np.zeros((1, 3)))


@pytest.mark.parametrize("name", ["particle", "disk"])
def test_jacobiator_formulas_match_direct_jacobiator(name):
    bundle = make_example(name)
    points = list(bundle.phase.M.sample(np.random.default_rng(22), 3))
    report = verify_jacobiator(bundle.structure, zero_form(bundle.phase.M, 2), points)
    assert report.curvature_formula < 1e-7
    assert report.momentum_formula < 1e-7
    assert report.gauge_projection < 1e-14
    assert report.worst_point is not None


def test_vertical_formula_for_particle(particle):
    points = list(particle.phase.M.sample(np.random.default_rng(23), 3))
    report = verify_jacobiator(particle.structure, zero_form(particle.phase.M, 2), points)
    assert report.vertical_formula is not None
    assert report.vertical_formula < 1e-7


def test_dj_wedge_k_is_exact_under_vertical_symmetry(particle):
    s = particle.structure
    d_jk = exterior_derivative(jk_two_form(s))
    for x in particle.phase.M.sample(np.random.default_rng(24), 3):
        assert np.allclose(value(dj_wedge_k(s)(x)), value(d_jk(x)), atol=1e-10)


def test_psi_trivector_is_the_cyclic_curvature_term():
    bundle = make_example("disk")
    s = bundle.structure
    pi = nh_bivector(bundle.phase)
    psi = psi_trivector(s, pi)
    for x in bundle.phase.M.sample(np.random.default_rng(25), 2):
        U = value(pi.dense(x))
        K = value(s.K_W.dense(x))
        V = value(s.V(x))
        t = np.einsum("gij,ai,bj,gc->abc", K, U, U, V)
        expected = t + np.einsum("bca->abc", t) + np.einsum("cab->abc", t)
        assert np.allclose(value(psi.dense(x)), expected, atol=1e-10)
