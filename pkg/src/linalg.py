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

from collections.abc import Callable
from typing import Any, Literal, Optional

import numpy as np
import scipy.linalg

from .constants import DET_THRESHOLD, PIVOT_THRESHOLD, RANK_RTOL
from .dual import Dual, einsum, is_dual, value
from .errors import SingularMatrixError

SolveMethod = Literal["qr", "lu"]
Solver = Callable[[np.ndarray], np.ndarray]


def _qr_solver(a: np.ndarray, point: Optional[Any]) -> Solver:
    q, r, piv = scipy.linalg.qr(a, pivoting=True)
    smallest = abs(r[-1, -1]) if r.size else 0.0
    scale = max(1.0, abs(r[0, 0]))
    if smallest < PIVOT_THRESHOLD * scale:
        raise SingularMatrixError(
            "singular matrix in pivoted QR solve",
            point,
            det=float(np.prod(np.abs(np.diag(r)))),
            condition=float(np.linalg.cond(a)),
        )

    def solve(rhs: np.ndarray) -> np.ndarray:
        z = scipy.linalg.solve_triangular(r, q.T @ rhs)
        x = np.empty_like(z)
        x[piv] = z
        return x

    return solve


def _lu_solver(a: np.ndarray, point: Optional[Any], threshold: float) -> Solver:
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    swaps = int(np.sum(piv != np.arange(len(piv))))
    det = float((-1.0) ** swaps * np.prod(np.diag(lu)))
    if abs(det) < threshold:
        raise SingularMatrixError(
            "singular matrix in LU solve",
            point,
            det=det,
            condition=float(np.linalg.cond(a)),
        )
    return lambda rhs: scipy.linalg.lu_solve((lu, piv), rhs)


def solve(
    a: Any,
    b: Any,
    method: SolveMethod = "qr",
    point: Optional[Any] = None,
    det_threshold: float = DET_THRESHOLD,
) -> Any:
    """Solve ``a x = b`` pointwise, propagating derivatives of either side.

    Derivatives follow from differentiating ``a x = b``:
    ``x' = a^-1 (b' - a' x)`` and
    ``x'' = a^-1 (b'' - a'' x - a'_Y x'_Z - a'_Z x'_Y)``.
    """
    av = value(a)
    bv = value(b)
    if method == "lu":
        solver = _lu_solver(av, point, det_threshold)
    else:
        solver = _qr_solver(av, point)

    vector_rhs = bv.ndim == 1
    x0 = solver(bv.reshape(bv.shape[0], -1))
    if not is_dual(a) and not is_dual(b):
        return x0.reshape(bv.shape)

    nvars = a.nvars if is_dual(a) else b.nvars
    order = min(d.order for d in (a, b) if is_dual(d))
    r, k = x0.shape

    def batched(rhs: np.ndarray) -> np.ndarray:
        tail = rhs.shape[2:]
        flat = solver(rhs.reshape(r, -1))
        return flat.reshape((r, k) + tail)

    da = a.grad if is_dual(a) else np.zeros(av.shape + (nvars,))
    db = b.grad.reshape(r, k, nvars) if is_dual(b) else np.zeros((r, k, nvars))
    dx = batched(db - np.einsum("ijY,jk->ikY", da, x0))

    d2x = None
    if order >= 2:
        d2a = a.hess if is_dual(a) and a.hess is not None else np.zeros(av.shape + (nvars, nvars))
        d2b = (
            b.hess.reshape(r, k, nvars, nvars)
            if is_dual(b) and b.hess is not None
            else np.zeros((r, k, nvars, nvars))
        )
        rhs2 = (
            d2b
            - np.einsum("ijYZ,jk->ikYZ", d2a, x0)
            - np.einsum("ijY,jkZ->ikYZ", da, dx)
            - np.einsum("ijZ,jkY->ikYZ", da, dx)
        )
        d2x = batched(rhs2)

    if vector_rhs:
        return Dual(
            x0[:, 0], dx[:, 0], None if d2x is None else d2x[:, 0]
        )
    return Dual(x0, dx, d2x)


def antisymmetrize(m: Any) -> Any:
    return (m - einsum("ij->ji", m)) * 0.5


def determinant(a: Any) -> float:
    return float(np.linalg.det(value(a)))


def numerical_rank(a: Any, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(value(a)), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * max(1.0, s[0])))


def row_space_basis(a: Any, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of ``a``."""
    av = np.atleast_2d(value(a))
    _, s, vt = np.linalg.svd(av, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, av.shape[1]))
    keep = s > rtol * max(1.0, s[0])
    return vt[keep]


def span_residual(vectors: Any, frame: Any) -> float:
    """Largest distance from a row of ``vectors`` to the row span of ``frame``."""
    basis = row_space_basis(frame)
    v = np.atleast_2d(value(vectors))
    projected = (v @ basis.T) @ basis
    return float(np.max(np.abs(v - projected))) if v.size else 0.0


def min_eigenvalue(a: Any) -> float:
    av = value(a)
    return float(np.min(np.linalg.eigvalsh(0.5 * (av + av.T))))


def least_squares(a: Any, b: Any) -> np.ndarray:
    """Minimum-norm solution of a possibly singular system, on values only."""
    x, *_ = scipy.linalg.lstsq(value(a), value(b))
    return np.asarray(x)
