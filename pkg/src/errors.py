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

from collections.abc import Sequence
from typing import Any, Optional

import numpy as np

from .dual import value


class NonholoError(Exception):
    """Base error. Messages start with "Error:" and name the failing point when there is one."""

    def __init__(self, message: str, point: Optional[Any] = None) -> None:
        if not message.startswith("Error:"):
            message = f"Error: {message}"
        if point is not None:
            message = f"{message} (at {format_point(point)})"
        super().__init__(message)
        self.point = point


class ChartError(NonholoError):
    pass


class DegreeError(NonholoError):
    pass


class DerivativeError(NonholoError):
    pass


class SingularMatrixError(NonholoError):
    def __init__(
        self,
        message: str,
        point: Optional[Any] = None,
        det: Optional[float] = None,
        condition: Optional[float] = None,
    ) -> None:
        details = []
        if det is not None:
            details.append(f"det={det:.3e}")
        if condition is not None:
            details.append(f"cond={condition:.3e}")
        if details:
            message = f"{message} [{', '.join(details)}]"
        super().__init__(message, point)
        self.det = det
        self.condition = condition


class ConstructionError(NonholoError):
    pass


class GaugeError(SingularMatrixError):
    pass


class SymmetryError(NonholoError):
    pass


class InvarianceError(NonholoError):
    def __init__(self, message: str, point: Optional[Any] = None, residual: float = 0.0):
        super().__init__(f"{message} [residual={residual:.3e}]", point)
        self.residual = residual


class ExampleError(NonholoError):
    pass


class MonitorError(NonholoError):
    """A monitor that drifted past its tolerance, or one the trajectory never recorded."""

    def __init__(
        self,
        name: str,
        drift: Optional[float] = None,
        tolerance: Optional[float] = None,
        known: Optional[Sequence[str]] = None,
    ) -> None:
        if drift is None:
            message = f"unknown monitor '{name}', have {list(known or [])}"
        else:
            message = f"monitor '{name}' drifted by {drift:.3e} (tolerance {tolerance or 0.0:.1e})"
        super().__init__(message)
        self.name = name
        self.drift = drift
        self.tolerance = tolerance


class SuiteError(NonholoError):
    pass


def format_point(point: Any) -> str:
    arr = np.atleast_1d(value(point))
    return "[" + ", ".join(f"{v:.6g}" for v in arr.ravel()) + "]"
