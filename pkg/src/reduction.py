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
    compose,
    differential,
    exterior_derivative,
    jacobian,
    jacobiator,
    kform_from_dense,
    kvector_from_dense,
    lie_derivative_bivector,
    lie_derivative_form,
    pullback,
    transported_bivector,
)
from .config import config
from .constants import (
    INVARIANCE_TOL,
    SECTION_FLOW_STEPS,
    SECTION_FLOW_TIME,
)
from .dual import concatenate, einsum, value
from .dynamics import flow
from .errors import InvarianceError, SingularMatrixError, SymmetryError
from .gauge import check_dynamical_gauge, gauge_transform, project_gauge_form, twisted_residual
from .linalg import least_squares, solve, span_residual
from .logger import logger
from .mechanics import (
    ConstrainedPhase,
    MechanicalSystem,
    bivector_from_two_form,
    build_constrained_phase,
    complement_projectors,
    nh_bivector,
    nh_vector_field,
    orthonormal_frame,
)
from .models import BatesSniatyckiReport, PsiReport, ReducedDynamicsReport
from .symmetry import (
    LieAlgebraData,
    SymmetryStructure,
    build_symmetry_structure,
    dj_wedge_k,
    jk_two_form,
    make_lie_data,
    nh_momentum_map,
)
from .utils import as_float_list, make_rng


@frozen(eq=False)
class QuotientChart:
    """Explicit orbit projection ρ: total → base with a section σ (ρ∘σ = id)."""

    total: Chart
    base: Chart
    rho: SmoothMap
    sigma: SmoothMap


def quotient_residuals(
    q: QuotientChart, generators: Frame, base_points: Sequence[np.ndarray]
) -> tuple[float, float]:
    """(max |ρ(σ(b)) - b|, max |Tρ(η_M)|) at σ of the given base points."""
    section = vertical = 0.0
    for b in base_points:
        m = value(q.sigma(b))
        section = max(section, float(np.max(np.abs(value(q.rho(m)) - b))))
        d_rho = value(jacobian(q.rho.fn, m, q.total))
        along = d_rho @ value(generators(m)).T
        vertical = max(vertical, float(np.max(np.abs(along))))
    return section, vertical


def invariance_residual(pi: KVector, generators: Frame, x: Point) -> tuple[float, int]:
    worst, worst_k = 0.0, 0
    for k in range(generators.rank):
        lie = value(lie_derivative_bivector(generators.vector(k), pi)(x))
        res = float(np.max(np.abs(lie)))
        if res > worst:
            worst, worst_k = res, k
    return worst, worst_k


def reduce_bivector(
    pi: KVector,
    q: QuotientChart,
    generators: Optional[Frame] = None,
    points: Optional[Sequence[np.ndarray]] = None,
) -> KVector:
    """π_red♯(α) = Tρ(π♯(ρ*α)) evaluated at σ(b).

    When generators are given, G-invariance of π is verified first (at the given
    points, or at a few sampled points of the total chart).
    """
    if generators is not None:
        if points is None:
            rng = make_rng(config.seed, f"{q.total.name}/invariance")
            points = list(q.total.sample(rng, config.check_samples))
        for x in points:
            residual, k = invariance_residual(pi, generators, x)
            if residual > INVARIANCE_TOL:
                raise InvarianceError(
                    f"bivector is not invariant along generator {k}", x, residual
                )

    def dense(b: Point) -> Any:
        m = q.sigma(b)
        d_rho = jacobian(q.rho.fn, m, q.total)
        return einsum("ai,ij,bj->ab", d_rho, pi.dense(m), d_rho)

    return kvector_from_dense(q.base, 2, dense)


def section_independence_residual(
    pi: KVector,
    q: QuotientChart,
    generators: Frame,
    points: Sequence[np.ndarray],
    rng: np.random.Generator,
) -> float:
    """Compare reductions through σ and through σ moved along a random orbit direction."""
    reduced = reduce_bivector(pi, q)
    coeffs = rng.normal(size=generators.rank)

    def moved_sigma(b: Point) -> Any:
        return flow(
            lambda x: einsum("k,ki->i", coeffs, generators(x)),
            q.sigma(b),
            SECTION_FLOW_TIME,
            SECTION_FLOW_STEPS,
        )

    moved = QuotientChart(q.total, q.base, q.rho, SmoothMap(q.base, q.total, moved_sigma))
    perturbed = reduce_bivector(pi, moved)
    worst = 0.0
    for b in points:
        diff = value(reduced.dense(b)) - value(perturbed.dense(b))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def reduce_vector_field(X: VectorField, q: QuotientChart) -> VectorField:
    def fn(b: Point) -> Any:
        m = q.sigma(b)
        return einsum("ai,i->a", jacobian(q.rho.fn, m, q.total), X(m))

    return VectorField(q.base, fn)


def reduce_form(beta: KForm, q: QuotientChart) -> KForm:
    """σ*β, which is the base form of β when β is basic."""
    return pullback(q.sigma, beta)


def basic_residuals(
    beta: KForm, generators: Frame, points: Sequence[np.ndarray]
) -> tuple[float, float]:
    """(max |i_{ξ_M} β|, max |L_{ξ_M} β|) over generators and points."""
    contraction = lie = 0.0
    for x in points:
        dense = value(beta.dense(x))
        along = value(generators(x))
        contraction = max(contraction, float(np.max(np.abs(np.einsum("ki,ij->kj", along, dense)))))
        for k in range(generators.rank):
            derivative = value(lie_derivative_form(generators.vector(k), beta)(x))
            lie = max(lie, float(np.max(np.abs(derivative))) if derivative.size else 0.0)
    return contraction, lie


# The bivector π_JK and the W° picture


def pi_jk(phase: ConstrainedPhase, s: SymmetryStructure) -> KVector:
    """Bivector of (C, Ω_M + <J, K_W>)."""
    return bivector_from_two_form(phase.C, phase.omega + jk_two_form(s))


def pi_jk_by_gauge(phase: ConstrainedPhase, s: SymmetryStructure) -> KVector:
    """Gauge transformation of π_nh by -<J, K_W>."""
    return gauge_transform(nh_bivector(phase), -jk_two_form(s))


def kappa0(system: MechanicalSystem) -> MatrixField:
    """κ₀(X, Y) = κ(P_D X, P_D Y) + κ(P_W X, P_W Y)."""
    projectors = complement_projectors(system.frame_D, system.frame_W)

    def fn(q: Point) -> Any:
        pi_d, pi_w = projectors(q)
        K = system.kappa(q)
        return einsum("ab,ai,bj->ij", K, pi_d, pi_d) + einsum("ab,ai,bj->ij", K, pi_w, pi_w)

    return MatrixField(system.Q, fn)


def annihilator_system(system: MechanicalSystem) -> MechanicalSystem:
    return evolve(system, name=f"{system.name}/W0", kappa=kappa0(system))


def annihilator_phase(
    system: MechanicalSystem, momentum_range: Optional[float] = None
) -> ConstrainedPhase:
    """W° = κ₀(D) as a constrained phase of the system with metric κ₀."""
    return build_constrained_phase(annihilator_system(system), momentum_range)


@frozen(eq=False)
class AnnihilatorBundle:
    phase0: ConstrainedPhase
    structure0: SymmetryStructure
    pi0: KVector
    Lambda0: KVector
    quotient0: QuotientChart


def w_annihilator_bundle(
    phase0: ConstrainedPhase, lie: LieAlgebraData, quotient0: QuotientChart
) -> AnnihilatorBundle:
    """π₀ from (C₀, Ω_W°) and its reduction Λ₀ to W°/G.

    Raises SymmetryError when W is not generated by g_W (no vertical symmetry).
    """
    lie0 = make_lie_data(phase0, lie.generators_Q, lie.structure_constants, lie.g_W_basis)
    structure0 = build_symmetry_structure(phase0, lie0)
    pi0 = nh_bivector(phase0)
    Lambda0 = reduce_bivector(pi0, quotient0, lie0.generators_M)
    return AnnihilatorBundle(phase0, structure0, pi0, Lambda0, quotient0)


def presymplectic_reduction(bundle: AnnihilatorBundle, b: np.ndarray) -> np.ndarray:
    """Λ₀ at b via π♯(α) = Tρ(Z) with i_Z Ω_W° = -ρ*α (any solution Z; the kernel is vertical)."""
    q0 = bundle.quotient0
    m = value(q0.sigma(b))
    Om = value(bundle.phase0.omega.dense(m))
    d_rho = value(jacobian(q0.rho.fn, m, q0.total))
    Z = least_squares(Om.T, -d_rho.T)
    return (d_rho @ Z).T


def kernel_residual(phase0: ConstrainedPhase, x: Point) -> float:
    """max |i_Z Ω_W°| over Z in 𝒲₀."""
    Zs = value(phase0.W_cal(x))
    if Zs.size == 0:
        return 0.0
    return float(np.max(np.abs(Zs @ value(phase0.omega.dense(x)))))


def psi_map(phase: ConstrainedPhase, phase0: ConstrainedPhase) -> SmoothMap:
    """Ψ = κ₀ ∘ κ⁻¹ restricted to M, expressed in the (q, p̂) chart of W°."""
    system, system0 = phase.system, phase0.system
    n = phase.q_dim

    def fn(x: Point) -> Any:
        q = x[:n]
        velocity = solve(system.kappa(q), phase.canonical_momenta(x), point=x)
        p0 = einsum("ab,b->a", system0.kappa(q), velocity)
        # p̂₀_i = <p₀, X̂₀_i> since X̂₀ is κ₀-orthonormal and κ₀⁻¹p₀ ∈ D
        X_hat0, _ = orthonormal_frame(system0, q)
        return concatenate([q, einsum("ia,a->i", X_hat0, p0)])

    return SmoothMap(phase.M, phase0.M, fn)


def psi_report(
    phase: ConstrainedPhase,
    s: SymmetryStructure,
    bundle0: AnnihilatorBundle,
    psi: SmoothMap,
    points: Sequence[np.ndarray],
) -> PsiReport:
    phase0, s0 = bundle0.phase0, bundle0.structure0
    n = phase.q_dim
    pi_JK = pi_jk(phase, s)
    omega_jk = phase.omega + jk_two_form(s)
    momentum = nh_momentum_map(s)
    g = s.lie.dim_g
    pairings = [momentum.pairing(np.eye(g)[j]) for j in range(g)]

    min_det = np.inf
    worst = dict.fromkeys(
        ("distribution", "two_form", "push", "adapted", "momentum", "hamiltonian"), 0.0
    )
    for x in points:
        m0 = value(psi(x))
        d_psi = value(jacobian(psi.fn, x, phase.M))
        min_det = min(min_det, abs(float(np.linalg.det(d_psi))))

        Cm = value(phase.C(x))
        pushed_c = Cm @ d_psi.T
        worst["distribution"] = max(worst["distribution"], span_residual(pushed_c, value(phase0.C(m0))))

        lhs = Cm @ value(omega_jk.dense(x)) @ Cm.T
        rhs = pushed_c @ value(phase0.omega.dense(m0)) @ pushed_c.T
        worst["two_form"] = max(worst["two_form"], float(np.max(np.abs(lhs - rhs))))

        pushed = d_psi @ value(pi_JK.dense(x)) @ d_psi.T
        worst["push"] = max(worst["push"], float(np.max(np.abs(pushed - value(bundle0.pi0.dense(m0))))))

        q = np.asarray(value(x))[:n]
        p = value(phase.canonical_momenta(x))
        p0 = value(phase0.canonical_momenta(m0))
        X_hat, _ = orthonormal_frame(phase.system, q)
        Z = value(phase.system.frame_W(q))
        adapted = max(
            float(np.max(np.abs(Z @ p0))) if Z.size else 0.0,
            float(np.max(np.abs(value(X_hat) @ (p - p0)))),
        )
        worst["adapted"] = max(worst["adapted"], adapted)

        J = value(s.J(x))[:, 0]
        J0 = value(s0.J(m0))[:, 0]
        P = value(s.P_gS(x))
        worst["momentum"] = max(worst["momentum"], float(np.max(np.abs(J0 - P.T @ J))))

        P_jk = value(pi_JK.dense(x))
        V = value(s.V(x))
        for j, f in enumerate(pairings):
            df = value(differential(f)(x))
            gap = df @ P_jk + V.T @ P[:, j]
            worst["hamiltonian"] = max(worst["hamiltonian"], float(np.max(np.abs(gap))))

    return PsiReport(
        diffeomorphism_min_det=float(min_det),
        constraint_distribution=worst["distribution"],
        two_form_on_c=worst["two_form"],
        bivector_push=worst["push"],
        adapted_coordinates=worst["adapted"],
        momentum_pairing=worst["momentum"],
        hamiltonian_pairing=worst["hamiltonian"],
    )


def psi_reduced(psi: SmoothMap, q: QuotientChart, q0: QuotientChart) -> SmoothMap:
    """Ψ_red = ρ₀ ∘ Ψ ∘ σ on the base charts."""
    return compose(compose(q.sigma, psi), q0.rho)


def poisson_map_residual(
    F: SmoothMap, source: KVector, target: KVector, points: Sequence[np.ndarray]
) -> float:
    pushed = transported_bivector(F, source)
    worst = 0.0
    for b in points:
        gap = value(pushed(b)) - value(target.dense(value(F(b))))
        worst = max(worst, float(np.max(np.abs(gap))))
    return worst


@frozen(eq=False)
class ReducedBundle:
    Lambda: KVector
    Lambda0: KVector
    pi_JK: KVector
    Psi: SmoothMap
    Psi_red: SmoothMap
    kappa0: MatrixField
    annihilator: AnnihilatorBundle


def build_reduced_bundle(
    phase: ConstrainedPhase,
    s: SymmetryStructure,
    q: QuotientChart,
    phase0: ConstrainedPhase,
    q0: QuotientChart,
) -> ReducedBundle:
    annihilator = w_annihilator_bundle(phase0, s.lie, q0)
    pi_JK = pi_jk(phase, s)
    psi = psi_map(phase, phase0)
    return ReducedBundle(
        Lambda=reduce_bivector(pi_JK, q, s.V),
        Lambda0=annihilator.Lambda0,
        pi_JK=pi_JK,
        Psi=psi,
        Psi_red=psi_reduced(psi, q, q0),
        kappa0=kappa0(phase.system),
        annihilator=annihilator,
    )


# Reduced checks


def casimir_residual(pi_red: KVector, f: ScalarField, points: Sequence[np.ndarray]) -> float:
    """max |π_red♯(df)| over the points."""
    df = differential(f)
    worst = 0.0
    for b in points:
        along = value(df(b)) @ value(pi_red.dense(b))
        worst = max(worst, float(np.max(np.abs(along))))
    return worst


def reduced_symplectic_form(pi_red: KVector) -> KForm:
    """Ω = -P⁻¹, the 2-form of a nondegenerate bivector."""
    chart = pi_red.chart

    def dense(b: Point) -> Any:
        P = pi_red.dense(b)
        return -solve(P, np.eye(chart.dim), method="lu", point=b)

    return kform_from_dense(chart, 2, dense)


def bates_sniatycki_check(
    phase: ConstrainedPhase,
    s: SymmetryStructure,
    q: QuotientChart,
    points: Sequence[np.ndarray],
) -> BatesSniatyckiReport:
    """dΩ^nh_red = -d<J, K>_red for Chaplygin systems."""
    if s.expected_s_rank != 0:
        raise SymmetryError("non-Chaplygin input: the bundle S is not zero")
    if q.base.dim % 2:
        raise SymmetryError(f"reduced bracket on an odd-dimensional base ({q.base.dim})")

    pi_red = reduce_bivector(nh_bivector(phase), q, s.V)
    omega_red = reduced_symplectic_form(pi_red)
    jk_red = reduce_form(jk_two_form(s), q)
    d_omega = exterior_derivative(omega_red)
    d_jk = exterior_derivative(jk_red)
    d_total = exterior_derivative(omega_red + jk_red)

    residual = closedness = 0.0
    worst_point = None
    for b in points:
        try:
            gap = float(np.max(np.abs(value(d_omega(b)) + value(d_jk(b)))))
        except SingularMatrixError as e:
            raise SymmetryError(f"reduced bracket is degenerate: {e}", b) from e
        if gap >= residual:
            residual, worst_point = gap, b
        closedness = max(closedness, float(np.max(np.abs(value(d_total(b))))))
    return BatesSniatyckiReport(
        residual=residual,
        closedness=closedness,
        worst_point=None if worst_point is None else as_float_list(worst_point),
    )


def reduced_dynamics_gauge_check(
    phase: ConstrainedPhase,
    s: SymmetryStructure,
    B: KForm,
    q: QuotientChart,
    Lambda: KVector,
    points: Sequence[np.ndarray],
    base_points: Sequence[np.ndarray],
) -> ReducedDynamicsReport:
    """Basicness of B + <J, K_W> and, when basic, π^B_red = gauge(Λ, ℬ) with its twisted Jacobiator."""
    B_tilde = project_gauge_form(B, phase)
    beta = B_tilde + jk_two_form(s)
    contraction, lie = basic_residuals(beta, s.V, points)
    is_basic = contraction <= INVARIANCE_TOL and lie <= INVARIANCE_TOL

    pi_nh = nh_bivector(phase)
    X_nh = nh_vector_field(phase, pi_nh)
    dynamical = check_dynamical_gauge(B_tilde, X_nh, points).max_residual

    report = ReducedDynamicsReport(
        basic_contraction=contraction,
        basic_lie=lie,
        is_basic=is_basic,
        dynamical=dynamical,
    )
    if not is_basic:
        logger.info(
            f"{phase.system.name}: B + <J, K_W> is not basic, reduced gauge relation does not apply"
        )
        return report

    calB = reduce_form(beta, q)
    pi_B_red = reduce_bivector(gauge_transform(pi_nh, B_tilde), q)
    via_lambda = gauge_transform(Lambda, calB)
    gauge_gap = 0.0
    for b in base_points:
        gap = value(via_lambda.dense(b)) - value(pi_B_red.dense(b))
        gauge_gap = max(gauge_gap, float(np.max(np.abs(gap))))
    twisted, closedness = twisted_residual(pi_B_red, -exterior_derivative(calB), base_points)

    momentum = nh_momentum_map(s)
    conserved = 0.0
    for j in range(s.lie.dim_g):
        f = momentum.pairing(np.eye(s.lie.dim_g)[j])
        df = differential(f)
        for x in points:
            conserved = max(conserved, abs(float(value(df(x)) @ value(X_nh(x)))))

    return report.model_copy(
        update={
            "gauge_residual": gauge_gap,
            "twisted_residual": twisted,
            "twisted_closedness": closedness,
            "conserved": conserved,
        }
    )


def reduced_jacobiator_residual(
    phase: ConstrainedPhase,
    s: SymmetryStructure,
    B: KForm,
    q: QuotientChart,
    base_points: Sequence[np.ndarray],
) -> float:
    """½[π^B_red, π^B_red] against (dB + dJ∧K_W)(π_B♯ρ*·, π_B♯ρ*·, π_B♯ρ*·) at σ(b).

    ψ drops out because ρ* kills the generators.
    """
    B_tilde = project_gauge_form(B, phase)
    pi_B = gauge_transform(nh_bivector(phase), B_tilde)
    pi_B_red = reduce_bivector(pi_B, q)
    lhs = jacobiator(pi_B_red)
    phi = exterior_derivative(B_tilde) + dj_wedge_k(s)
    worst = 0.0
    for b in base_points:
        m = value(q.sigma(b))
        U = value(jacobian(q.rho.fn, m, q.total)) @ value(pi_B.dense(m))
        rhs = np.einsum("ijk,ai,bj,ck->abc", value(phi.dense(m)), U, U, U)
        target = value(lhs.dense(b))
        worst = max(worst, float(np.max(np.abs(target - rhs)) / max(1.0, np.max(np.abs(target)))))
    return worst
