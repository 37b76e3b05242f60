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

from src.calculus import Chart, ScalarField, VectorField
from src.dual import stack
from src.dynamics import (
    flow,
    integrate,
    monitor_drift,
    order_ratio,
)
from src.errors import ChartError, MonitorError, NonholoError
from src.examples import make_example
from src.mechanics import nh_vector_field

PLANE = Chart("plane", ("x", "y"), ((-2.0, 2.0), (-2.0, 2.0)))
TRANSLATION = VectorField(PLANE, lambda x: np.array([1.0, 0.0]))
ROTATION = VectorField(PLANE, lambda x: stack([-x[1], x[0]]))
RADIUS = ScalarField(PLANE, lambda x: x[0] * x[0] + x[1] * x[1])


@pytest.mark.parametrize("method", ["rk4", "euler"])
def test_translation_flow(method):
    traj = integrate(TRANSLATION, np.array([0.0, 0.5]), 1.0, 0.1, method)
    assert np.allclose(traj.final_state, [1.0, 0.5])
    assert len(traj.times) == 11
    assert traj.error is None


def test_zero_field_keeps_state():
    still = VectorField(PLANE, lambda x: np.zeros(2))
    traj = integrate(still, np.array([0.3, -0.4]), 1.0, 0.25)
    assert np.all(traj.states == traj.states[0])


def test_rotation_conserves_radius():
    traj = integrate(ROTATION, np.array([1.0, 0.0]), 2 * np.pi, 2 * np.pi / 600, monitors={"r2": RADIUS})
    assert monitor_drift(traj, "r2") < 1e-8
    assert np.allclose(traj.final_state, [1.0, 0.0], atol=1e-6)


def test_euler_drifts_off_the_circle():
    traj = integrate(ROTATION, np.array([1.0, 0.0]), 1.0, 0.1, "euler", monitors={"r2": RADIUS})
    assert monitor_drift(traj, "r2") > 1e-3


def test_unknown_monitor():
    traj = integrate(TRANSLATION, np.zeros(2), 0.1, 0.1, monitors={"r2": RADIUS})
    with pytest.raises(MonitorError, match="unknown monitor 'H'") as e:
        monitor_drift(traj, "H")
    assert e.value.name == "H"
    assert e.value.drift is None
    assert "r2" in str(e.value)


def test_monitor_error_reports_drift():
    err = MonitorError("r2", 2e-3, 1e-6)
    assert str(err).startswith("Error: monitor 'r2' drifted by 2.000e-03")
    assert isinstance(err, NonholoError)


def test_bad_inputs():
    with pytest.raises(NonholoError, match="positive"):
        integrate(TRANSLATION, np.zeros(2), 1.0, 0.0)
    with pytest.raises(ChartError):
        integrate(TRANSLATION, np.zeros(3), 1.0, 0.1)


def test_blow_up_truncates_the_trajectory():
    square = VectorField(PLANE, lambda x: stack([x[0] * x[0] * x[0] * x[0], 0.0 * x[1]]))
    traj = integrate(square, np.array([10.0, 0.0]), 10.0, 0.5)
    assert traj.error is not None
    assert traj.error.startswith("Error:")
    assert np.all(np.isfinite(traj.states))


def test_flow_matches_exact_rotation():
    end = flow(ROTATION.fn, np.array([1.0, 0.0]), np.pi / 2, 200)
    assert np.allclose(end, [0.0, 1.0], atol=1e-8)


def test_rk4_order_on_rotation():
    ratio = order_ratio(ROTATION, np.array([1.0, 0.0]), 2.0, 0.1)
    assert 12 < ratio < 20


def test_rk4_is_exact_on_translation():
    assert order_ratio(TRANSLATION, np.array([0.0, 0.5]), 1.0, 0.1) == np.inf


def test_particle_energy_and_rk4_order():
    bundle = make_example("particle")
    X = nh_vector_field(bundle.phase)
    x0 = bundle.initial_state()
    traj = integrate(X, x0, 0.5, 1e-3, monitors=bundle.monitors)
    assert monitor_drift(traj, "H") < 1e-8
    # the leaf function is not conserved by the nonholonomic flow
    assert monitor_drift(traj, "leaf_function") > 1e-3
    assert order_ratio(X, x0, 5.0, 0.05) > 8


def test_disk_momenta_are_conserved():
    bundle = make_example("disk")
    traj = integrate(nh_vector_field(bundle.phase), bundle.initial_state(), 1.0, 1e-2, monitors=bundle.monitors)
    for name in bundle.conserved:
        assert monitor_drift(traj, name) < 1e-8
