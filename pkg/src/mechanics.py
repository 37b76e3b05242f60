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
from functools import lru_cache
from typing import Any, Optional

import numpy as np
from attrs import evolve, frozen

from .calculus import (
    Chart,
    Frame,
    KForm,
    KVector,
    MatrixField,
    Point,
    ScalarField,
    SmoothMap,
    VectorField,
    differential,
    exterior_derivative,
    frame_brackets,
    jacobian,
    kvector_from_dense,
    memoized,
    sharp,
)
from .config import config
from .constants import FRAME_CONDITION_LIMIT, METRIC_EIGEN_FLOOR, ZERO_TOL
from .dual import Dual, concatenate, einsum, sqrt, stack, total, value
from .errors import ConstructionError, SingularMatrixError
from .linalg import antisymmetrize, min_eigenvalue, numerical_rank, solve, span_residual
from .logger import logger
from .utils import make_rng


@frozen(eq=False)
class MechanicalSystem:
    """Configuration space with a kinetic metric, potential and linear velocity constraints.

    ``frame_D`` spans the constraint distribution D and ``frame_W`` a complement W.
    The Lagrangian is kinetic energy plus ``potential``.
    """

    name: str
    Q: Chart
    kappa: MatrixField
    potential: ScalarField
    constraint_forms: tuple[KForm, ...]
    frame_D: Frame
    frame_W: Frame

    @property
    def rank(self) -> int:
        return self.frame_D.rank

    def constraint_matrix(self, q: Point) -> Any:
        return stack([form.fn(q) for form in self.constraint_forms])


def validate_system(system: MechanicalSystem, points: np.ndarray) -> None:
    n = system.Q.dim
    if system.frame_D.rank + system.frame_W.rank != n:
        raise ConstructionError(
            f"{system.name}: rank D + rank W = {system.frame_D.rank + system.frame_W.rank}, expected {n}"
        )
    if len(system.constraint_forms) != system.frame_W.rank:
        raise ConstructionError(f"{system.name}: need one constraint form per direction of W")

    for q in points:
        K = value(system.kappa(q))
        if np.max(np.abs(K - K.T)) > ZERO_TOL or min_eigenvalue(K) < METRIC_EIGEN_FLOOR:
            raise ConstructionError(f"{system.name}: kinetic metric is not positive definite", q)

        X = value(system.frame_D(q))
        eps = value(system.constraint_matrix(q))
        if np.max(np.abs(eps @ X.T)) > ZERO_TOL:
            raise ConstructionError(f"{system.name}: D frame violates the constraints", q)

        full = np.vstack([X, value(system.frame_W(q))])
        if numerical_rank(full) < n or np.linalg.cond(full) > FRAME_CONDITION_LIMIT:
            raise ConstructionError(f"{system.name}: D and W do not span TQ", q)


def _inner(K: Any, u: Any, v: Any) -> Any:
    return einsum("a,ab,b->", u, K, v)


def canonical_momenta(system: MechanicalSystem, x: Point) -> Any:
    """p = κ X̂ᵀ p̂ at a point (q, p̂) of M."""
    n = system.Q.dim
    q, p_hat = x[:n], x[n:]
    X_hat, _ = orthonormal_frame(system, q)
    return einsum("ab,ib,i->a", system.kappa(q), X_hat, p_hat)


def orthonormal_frame(system: MechanicalSystem, q: Point) -> tuple[Any, Any]:
    """Gram-Schmidt on the D frame in the kinetic metric.

    Returns (X̂, R) with X̂ κ-orthonormal and X = Rᵀ X̂ row-wise, R upper triangular.
    """
    X = system.frame_D(q)
    K = system.kappa(q)
    r = system.rank
    hats: list[Any] = []
    rows: list[list[Any]] = [[0.0] * r for _ in range(r)]
    for i in range(r):
        v = X[i]
        for j, hat in enumerate(hats):
            coeff = _inner(K, X[i], hat)
            rows[j][i] = coeff
            v = v - hat * coeff
        norm2 = _inner(K, v, v)
        if value(norm2) <= METRIC_EIGEN_FLOOR:
            raise ConstructionError(f"{system.name}: D frame degenerate in the kinetic metric", q)
        norm = sqrt(norm2)
        rows[i][i] = norm
        hats.append(v / norm)
    R = stack([stack(row) for row in rows])
    return stack(hats), R


@frozen(eq=False)
class ConstrainedPhase:
    """The constraint submanifold M = κ(D) ⊂ T*Q in (q, p̂) coordinates.

    p̂ are momenta along the κ-orthonormalized D frame, so ι(q, p̂) = (q, κ X̂ᵀ p̂).
    """

    system: MechanicalSystem
    M: Chart
    cotangent: Chart
    iota: SmoothMap
    tau: SmoothMap
    theta: KForm
    omega: KForm
    C: Frame
    W_cal: Frame
    H: ScalarField

    @property
    def rank(self) -> int:
        return self.system.rank

    @property
    def q_dim(self) -> int:
        return self.system.Q.dim

    def split(self, x: Point) -> tuple[Any, Any]:
        n = self.q_dim
        return x[:n], x[n:]

    def canonical_momenta(self, x: Point) -> Any:
        return canonical_momenta(self.system, x)

    def frame_momenta(self, x: Point) -> Any:
        """K_i = <p, X_i> for the original D frame."""
        q, p_hat = self.split(x)
        _, R = orthonormal_frame(self.system, q)
        return einsum("ji,j->i", R, p_hat)

    def point_from_frame_momenta(self, q: Point, momenta: Any) -> Any:
        _, R = orthonormal_frame(self.system, q)
        p_hat = solve(einsum("ij->ji", R), momenta, point=q)
        return concatenate([q, p_hat])


def build_constrained_phase(
    system: MechanicalSystem, momentum_range: Optional[float] = None
) -> ConstrainedPhase:
    Q = system.Q
    n, r = Q.dim, system.rank
    k = system.frame_W.rank
    p_range = momentum_range if momentum_range is not None else config.momentum_range

    rng = make_rng(config.seed, f"{system.name}/construction")
    validate_system(system, Q.sample(rng, config.check_samples))

    M = Chart(
        name=f"{system.name}/M",
        coord_names=Q.coord_names + tuple(f"p{i + 1}" for i in range(r)),
        sample_box=Q.sample_box + tuple((-p_range, p_range) for _ in range(r)),
        periodic=Q.periodic + tuple(False for _ in range(r)),
    )
    cotangent = Chart(
        name=f"{system.name}/T*Q",
        coord_names=Q.coord_names + tuple(f"p_{name}" for name in Q.coord_names),
        sample_box=Q.sample_box + tuple((-3 * p_range, 3 * p_range) for _ in range(n)),
        periodic=Q.periodic + tuple(False for _ in range(n)),
    )

    def iota_fn(x: Point) -> Any:
        return concatenate([x[:n], canonical_momenta(system, x)])

    def theta_fn(x: Point) -> Any:
        return concatenate([canonical_momenta(system, x), np.zeros(r)])

    def c_frame(x: Point) -> Any:
        X_hat, _ = orthonormal_frame(system, x[:n])
        top = concatenate([X_hat, np.zeros((r, r))], axis=1)
        bottom = np.hstack([np.zeros((r, n)), np.eye(r)])
        return concatenate([top, bottom], axis=0)

    def w_frame(x: Point) -> Any:
        Z = system.frame_W(x[:n])
        return concatenate([Z, np.zeros((k, r))], axis=1)

    def hamiltonian(x: Point) -> Any:
        p_hat = x[n:]
        return total(p_hat * p_hat) * 0.5 - system.potential(x[:n])

    theta = KForm(M, 1, theta_fn)
    omega = -exterior_derivative(theta)
    phase = ConstrainedPhase(
        system=system,
        M=M,
        cotangent=cotangent,
        iota=SmoothMap(M, cotangent, iota_fn),
        tau=SmoothMap(M, Q, lambda x: x[:n]),
        theta=theta,
        omega=evolve(omega, fn=memoized(omega.fn)),
        C=Frame(M, 2 * r, memoized(c_frame)),
        W_cal=Frame(M, k, w_frame),
        H=ScalarField(M, hamiltonian),
    )
    logger.debug(f"Built constrained phase for {system.name}: dim M = {M.dim}, rank C = {2 * r}")
    return phase


def complement_projectors(first: Frame, second: Frame) -> Callable[[Point], tuple[Any, Any]]:
    """x -> (Π_first, Π_second) for the splitting TM = span(first) ⊕ span(second)."""
    r1 = first.rank

    def fn(x: Point) -> tuple[Any, Any]:
        A, B = first(x), second(x)
        F = concatenate([A, B], axis=0)
        dim = value(F).shape[0]
        coeffs = solve(einsum("ij->ji", F), np.eye(dim), point=x)
        pi_first = einsum("ai,aj->ij", A, coeffs[:r1])
        pi_second = einsum("ai,aj->ij", B, coeffs[r1:])
        return pi_first, pi_second

    return fn


def constraint_coefficients(phase: ConstrainedPhase) -> Callable[[Point], Any]:
    """x -> rows expressing a vector's components along C in the basis C ⊕ 𝒲."""
    rc = phase.C.rank

    def fn(x: Point) -> Any:
        F = concatenate([phase.C(x), phase.W_cal(x)], axis=0)
        coeffs = solve(einsum("ij->ji", F), np.eye(value(F).shape[0]), point=x)
        return coeffs[:rc]

    return fn


def bivector_from_two_form(frame: Frame, omega: KForm) -> KVector:
    """Bivector π with π♯α = -X_α, where X_α ∈ span(frame) solves i_X Ω = α on the frame.

    With C the frame rows and G = C Ω Cᵀ this is P = -Cᵀ G⁻¹ C.
    """
    chart = frame.chart

    def dense(x: Point) -> Any:
        Cm = frame(x)
        G = einsum("ai,ij,bj->ab", Cm, omega.dense(x), Cm)
        try:
            Y = solve(G, Cm, point=x)
        except SingularMatrixError as e:
            raise ConstructionError(f"two-form is degenerate on the frame: {e}", x) from e
        return antisymmetrize(-einsum("ai,aj->ij", Cm, Y))

    return kvector_from_dense(chart, 2, memoized(dense))


@lru_cache(maxsize=32)
def nh_bivector(phase: ConstrainedPhase) -> KVector:
    """One bivector per phase so its per-point memo is shared by every caller."""
    return bivector_from_two_form(phase.C, phase.omega)


def hamiltonian_vector_field(pi: KVector, H: ScalarField) -> VectorField:
    """X_H = -π♯dH."""
    return -sharp(pi, differential(H))


def nh_vector_field(phase: ConstrainedPhase, pi: Optional[KVector] = None) -> VectorField:
    return hamiltonian_vector_field(pi if pi is not None else nh_bivector(phase), phase.H)


def nh_hamel_field(phase: ConstrainedPhase) -> VectorField:
    """X_nh in quasi-velocity form, for integrating trajectories at plain points.

    With μ^i = X̂_i κ dq dual to the orthonormal frame:
    q̇ = p̂ X̂ and dp̂_k/dt = dU(X̂_k) + p̂_i p̂_j μ^i([X̂_j, X̂_k]).
    Agrees with -π_nh♯dH; only a first derivative of the frame on Q is needed.
    """
    system = phase.system
    Q = system.Q
    n = phase.q_dim

    def fn(x: Point) -> Any:
        xv = value(x)
        q, p_hat = xv[:n], xv[n:]
        seeded, _ = orthonormal_frame(system, Dual.variable(q))
        if isinstance(seeded, Dual):
            X_hat, dX = seeded.val, seeded.grad
        else:
            X_hat, dX = np.asarray(seeded, dtype=float), np.zeros((phase.rank, n, n))
        kappa = value(system.kappa(q))
        dU = value(jacobian(system.potential.fn, q, Q))
        # brackets[j, k] = [X̂_j, X̂_k]
        brackets = np.einsum("kab,jb->jka", dX, X_hat) - np.einsum("jab,kb->jka", dX, X_hat)
        mu = X_hat @ kappa
        coupling = np.einsum("ic,jkc,i,j->k", mu, brackets, p_hat, p_hat)
        return np.concatenate([p_hat @ X_hat, X_hat @ dU + coupling])

    return VectorField(phase.M, fn)


def nh_equation_residual(phase: ConstrainedPhase, X: VectorField, x: Point) -> float:
    """max |(i_X Ω - dH)(c)| over c in C, plus the distance of X from C."""
    Om = value(phase.omega.dense(x))
    Xv = value(X(x))
    Cm = value(phase.C(x))
    dH = value(differential(phase.H)(x))
    lhs = Cm @ (Om.T @ Xv)
    residual = float(np.max(np.abs(lhs - Cm @ dH)))
    return max(residual, span_residual(Xv[None, :], Cm))


def w_curvature(phase: ConstrainedPhase) -> Callable[[Point], Any]:
    """x -> 𝐊[m, i, j] with 𝐊(X, Y) = -P_𝒲([P_C X, P_C Y]), a 𝒲-valued 2-form on M."""
    projectors = complement_projectors(phase.C, phase.W_cal)
    coefficients = constraint_coefficients(phase)
    brackets = frame_brackets(phase.C)

    def fn(x: Point) -> Any:
        _, pi_w = projectors(x)
        lc = coefficients(x)
        pair_values = -einsum("mn,abn->abm", pi_w, brackets(x))
        return einsum("ai,bj,abm->mij", lc, lc, pair_values)

    return fn


def constrained_hamiltonian_field(system: MechanicalSystem, cotangent: Chart) -> VectorField:
    """Hamilton's equations on T*Q with Lagrange multipliers enforcing the constraints."""
    Q = system.Q
    n = Q.dim

    def energy(z: Point) -> Any:
        q, p = z[:n], z[n:]
        v = solve(system.kappa(q), p, point=q)
        return total(p * v) * 0.5 - system.potential(q)

    def eps_kinv(q: Point) -> Any:
        eps = system.constraint_matrix(q)
        return einsum("ji->ij", solve(system.kappa(q), einsum("ij->ji", eps), point=q))

    def fn(z: Point) -> Any:
        q, p = z[:n], z[n:]
        grad_H = jacobian(energy, z, cotangent)
        dH_q, qdot = grad_H[:n], grad_H[n:]
        eps = system.constraint_matrix(q)
        E = eps_kinv(q)
        E_dot = einsum("anl,l->an", jacobian(eps_kinv, q, Q), qdot)
        lam = solve(
            einsum("an,bn->ab", E, eps),
            einsum("an,n->a", E, dH_q) - einsum("an,n->a", E_dot, p),
            point=z,
        )
        pdot = -dH_q + einsum("an,a->n", eps, lam)
        return concatenate([qdot, pdot])

    return VectorField(cotangent, fn)
