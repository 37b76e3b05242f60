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

from collections.abc import Callable, Mapping
from typing import Any, Optional

import numpy as np
from attrs import field, frozen

from .calculus import ScalarField, VectorField
from .constants import ROUNDOFF
from .dual import value
from .errors import ChartError, MonitorError, NonholoError
from .logger import logger
from .models import IntegratorMethod

StepFn = Callable[[Callable[[Any], Any], Any, float], Any]


@frozen(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    monitors: dict[str, np.ndarray] = field(factory=dict)
    error: Optional[str] = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def rk4_step(f: Callable[[Any], Any], x: Any, dt: float) -> Any:
    k1 = f(x)
    k2 = f(x + k1 * (0.5 * dt))
    k3 = f(x + k2 * (0.5 * dt))
    k4 = f(x + k3 * dt)
    return x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)


def euler_step(f: Callable[[Any], Any], x: Any, dt: float) -> Any:
    return x + f(x) * dt


_STEPS: dict[str, StepFn] = {"rk4": rk4_step, "euler": euler_step}


def integrate(
    X: VectorField,
    x0: Any,
    t_end: float,
    dt: float,
    method: IntegratorMethod = "rk4",
    monitors: Optional[Mapping[str, ScalarField]] = None,
) -> Trajectory:
    """Fixed-step integration of X from x0, evaluating monitors at every step."""
    if dt <= 0:
        raise NonholoError(f"time step must be positive, got {dt}")
    if method not in _STEPS:
        raise NonholoError(f"unknown integrator {method}")
    state = np.asarray(x0, dtype=float)
    if state.shape != (X.chart.dim,):
        raise ChartError(
            f"initial state has {state.size} coordinates, chart {X.chart.name} needs {X.chart.dim}"
        )
    step = _STEPS[method]
    n_steps = int(round(t_end / dt))
    monitors = dict(monitors or {})

    states = [state]
    series: dict[str, list[float]] = {
        name: [float(value(f(state)))] for name, f in monitors.items()
    }
    error = None
    for i in range(n_steps):
        state = np.asarray(value(step(X.fn, state, dt)), dtype=float)
        if not np.all(np.isfinite(state)):
            error = f"Error: non-finite state after step {i + 1}, trajectory truncated"
            logger.error(error)
            break
        states.append(state)
        for name, f in monitors.items():
            series[name].append(float(value(f(state))))

    times = dt * np.arange(len(states))
    logger.debug(f"Integrated {len(states) - 1} {method} steps of size {dt}")
    return Trajectory(
        times=times,
        states=np.vstack(states),
        monitors={name: np.asarray(vals) for name, vals in series.items()},
        error=error,
    )


def monitor_drift(traj: Trajectory, name: str) -> float:
    if name not in traj.monitors:
        raise MonitorError(name, known=sorted(traj.monitors))
    series = traj.monitors[name]
    return float(np.max(np.abs(series - series[0])))


def flow(f: Callable[[Any], Any], x0: Any, t: float, steps: int) -> Any:
    """RK4 flow for time t; works on Dual states, so flows can be differentiated."""
    dt = t / steps
    x = x0
    for _ in range(steps):
        x = rk4_step(f, x, dt)
    return x


def order_ratio(X: VectorField, x0: Any, t_end: float, dt: float) -> float:
    """Final-state error at dt over the error at dt/2, both against a dt/8 run.

    About 16 for RK4 once out of round-off; ``inf`` when the coarse run already
    matches the reference to round-off (e.g. a flow that is polynomial in time).
    """
    reference = integrate(X, x0, t_end, dt / 8).final_state
    coarse = _state_error(integrate(X, x0, t_end, dt).final_state, reference)
    fine = _state_error(integrate(X, x0, t_end, dt / 2).final_state, reference)
    if coarse <= ROUNDOFF * (1.0 + float(np.max(np.abs(reference)))):
        return np.inf
    if fine == 0.0:
        return np.inf
    return coarse / fine


def drift_ratio(
    X: VectorField, x0: Any, monitor: ScalarField, t_end: float, dt: float
) -> float:
    """Monitor drift at dt over drift at dt/2; ``inf`` when the monitor is exactly conserved."""
    coarse = integrate(X, x0, t_end, dt, monitors={"m": monitor})
    fine = integrate(X, x0, t_end, dt / 2, monitors={"m": monitor})
    fine_drift = monitor_drift(fine, "m")
    if fine_drift == 0.0:
        return np.inf
    return monitor_drift(coarse, "m") / fine_drift


def _state_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))
