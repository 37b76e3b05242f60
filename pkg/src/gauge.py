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

from .calculus import (
    KForm,
    KVector,
    Point,
    VectorField,
    exterior_derivative,
    jacobiator,
    kform_from_dense,
    kvector_from_dense,
    sharp_three_form,
)
from .constants import DET_THRESHOLD
from .dual import einsum, value
from .errors import GaugeError, SingularMatrixError
from .linalg import antisymmetrize, determinant, solve
from .logger import logger
from .mechanics import ConstrainedPhase, complement_projectors
from .models import GaugeReport
from .utils import as_float_list


def gauge_transform(pi: KVector, B: KForm) -> KVector:
    """π_B♯ = π♯ ∘ (Id + B♭ ∘ π♯)⁻¹, i.e. P_B = (I + P B)⁻¹ P."""
    chart = pi.chart
    n = chart.dim

    def dense(x: Point) -> Any:
        P = pi.dense(x)
        A = np.eye(n) + einsum("ij,jk->ik", P, B.dense(x))
        try:
            return antisymmetrize(solve(A, P, method="lu", point=x))
        except SingularMatrixError as e:
            raise GaugeError(
                "Id + B♭∘π♯ is not invertible", x, det=e.det, condition=e.condition
            ) from e

    return kvector_from_dense(chart, 2, dense)


def gauge_determinant(pi: KVector, B: KForm, x: Point) -> float:
    P = value(pi.dense(x))
    return determinant(np.eye(len(P)) + P @ value(B.dense(x)))


def check_dynamical_gauge(
    B: KForm,
    X_H: VectorField,
    points: Sequence[np.ndarray],
    pi: Optional[KVector] = None,
) -> GaugeReport:
    """Dynamical gauge: i_{X_H} B = 0. Reports the worst residual and the smallest |det(Id + B♭π♯)|."""
    worst, worst_point = 0.0, None
    min_det = 1.0 if pi is None else np.inf
    for x in points:
        contraction = value(einsum("i,ij->j", X_H(x), B.dense(x)))
        residual = float(np.max(np.abs(contraction))) if contraction.size else 0.0
        if residual >= worst:
            worst, worst_point = residual, x
        if pi is not None:
            min_det = min(min_det, abs(gauge_determinant(pi, B, x)))
    return GaugeReport(
        max_residual=worst,
        worst_point=None if worst_point is None else as_float_list(worst_point),
        min_det=float(min_det),
        invertible=bool(min_det >= DET_THRESHOLD),
    )


def twisted_residual(
    pi: KVector, phi: KForm, points: Sequence[np.ndarray]
) -> tuple[float, float]:
    """Residuals of ½[π, π] = π♯φ and of dφ = 0 (reported as 0 for exact φ)."""
    lhs = jacobiator(pi)
    rhs = sharp_three_form(pi, phi)
    d_phi = None if phi.exact else exterior_derivative(phi)
    residual = closedness = 0.0
    for x in points:
        target = value(rhs(x))
        diff = value(lhs(x)) - target
        if diff.size:
            scale = max(1.0, float(np.max(np.abs(target))))
            residual = max(residual, float(np.max(np.abs(diff))) / scale)
        if d_phi is not None:
            dp = value(d_phi(x))
            closedness = max(closedness, float(np.max(np.abs(dp))) if dp.size else 0.0)
    if phi.exact:
        logger.debug("Twisting form is exact, skipping the closedness evaluation")
    return residual, closedness


def project_gauge_form(B: KForm, phase: ConstrainedPhase) -> KForm:
    """B̃(X, Y) = B(P_C X, P_C Y), which satisfies i_Z B̃ = 0 for Z ∈ 𝒲."""
    projectors = complement_projectors(phase.C, phase.W_cal)

    def dense(x: Point) -> Any:
        pi_c, _ = projectors(x)
        return einsum("lm,li,mj->ij", B.dense(x), pi_c, pi_c)

    return kform_from_dense(B.chart, 2, dense)


def w_contraction(B: KForm, phase: ConstrainedPhase, x: Point) -> float:
    """max |i_Z B| over the 𝒲 frame."""
    Zs = value(phase.W_cal(x))
    if Zs.size == 0:
        return 0.0
    return float(np.max(np.abs(Zs @ value(B.dense(x)))))
