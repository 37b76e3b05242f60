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
from attrs import frozen

from .calculus import (
    Frame,
    KForm,
    KVector,
    Point,
    ScalarField,
    exterior_derivative,
    frame_brackets,
    jacobiator,
    kform_from_dense,
    kvector_from_dense,
    lie_derivative_form,
    memoized,
    pair,
    sum_batch,
    wedge,
)
from .config import config
from .constants import RANK_RTOL, SECTION_TOL
from .dual import concatenate, einsum, reshape, stack, value
from .errors import SymmetryError
from .gauge import gauge_transform, project_gauge_form, w_contraction
from .linalg import numerical_rank, row_space_basis, solve, span_residual
from .logger import logger
from .mechanics import (
    ConstrainedPhase,
    MechanicalSystem,
    complement_projectors,
    nh_bivector,
    orthonormal_frame,
    w_curvature,
)
from .models import JacobiatorReport
from .utils import as_float_list, make_rng


@frozen(eq=False)
class LieAlgebraData:
    """Infinitesimal action: generators on Q and M with c[k, i, j] = c^k_{ij}.

    Sign convention: [η^i_Q, η^j_Q] = -c^k_{ij} η^k_Q (left action).
    """

    dim_g: int
    structure_constants: np.ndarray
    generators_Q: Frame
    generators_M: Frame
    g_W_basis: tuple[int, ...]

    @property
    def generators_W(self) -> Frame:
        return self.generators_M.select(self.g_W_basis)


def lift_generators(phase: ConstrainedPhase, generators_Q: Frame) -> Frame:
    """Cotangent lift restricted to M. In (q, p̂) coordinates it is (η_Q, 0) for frame-invariant actions."""
    n, r = phase.q_dim, phase.rank

    def fn(x: Point) -> Any:
        return concatenate([generators_Q(x[:n]), np.zeros((generators_Q.rank, r))], axis=1)

    return Frame(phase.M, generators_Q.rank, fn)


def make_lie_data(
    phase: ConstrainedPhase,
    generators_Q: Frame,
    structure_constants: Any,
    g_W_basis: Sequence[int],
) -> LieAlgebraData:
    c = np.asarray(structure_constants, dtype=float)
    dim_g = generators_Q.rank
    if c.shape != (dim_g, dim_g, dim_g):
        raise SymmetryError(f"structure constants must have shape {(dim_g,) * 3}, got {c.shape}")
    return LieAlgebraData(
        dim_g=dim_g,
        structure_constants=c,
        generators_Q=generators_Q,
        generators_M=lift_generators(phase, generators_Q),
        g_W_basis=tuple(int(i) for i in g_W_basis),
    )


def validate_lie_data(lie: LieAlgebraData, system: MechanicalSystem, points: np.ndarray) -> None:
    c = lie.structure_constants
    if np.max(np.abs(c + np.swapaxes(c, 1, 2))) > 1e-12:
        raise SymmetryError("structure constants are not antisymmetric")
    outside = [k for k in range(lie.dim_g) if k not in lie.g_W_basis]
    if outside and np.max(np.abs(c[np.ix_(outside, range(lie.dim_g), lie.g_W_basis)])) > 1e-12:
        raise SymmetryError("g_W is not an ideal: [g, g_W] leaves g_W")

    brackets = frame_brackets(lie.generators_Q)
    for q in points:
        eta = value(lie.generators_Q(q))
        expected = -np.einsum("kij,kc->ijc", c, eta)
        if np.max(np.abs(value(brackets(q)) - expected)) > 1e-9:
            raise SymmetryError("generator brackets disagree with the structure constants", q)
        W = value(system.frame_W(q))
        gw = eta[list(lie.g_W_basis)]
        if span_residual(W, gw) > 1e-9 or span_residual(gw, W) > 1e-9:
            raise SymmetryError(
                "unsupported: the complement W is not generated by g_W (no vertical symmetry)", q
            )


def frame_invariance_residual(phase: ConstrainedPhase, lie: LieAlgebraData, x: Point) -> float:
    """max |[η_Q, X̂_i]|; the lifted action is (η_Q, 0) only when this vanishes."""
    system = phase.system
    n, g = system.Q.dim, lie.dim_g

    def combined(q: Point) -> Any:
        X_hat, _ = orthonormal_frame(system, q)
        return concatenate([lie.generators_Q(q), X_hat], axis=0)

    brackets = frame_brackets(Frame(system.Q, g + system.rank, combined))
    cross = value(brackets(np.asarray(value(x))[:n]))[:g, g:]
    return float(np.max(np.abs(cross))) if cross.size else 0.0


@frozen(eq=False)
class SymmetryStructure:
    phase: ConstrainedPhase
    lie: LieAlgebraData
    A_W: KForm
    K_W: KForm
    J: KForm

    @property
    def V(self) -> Frame:
        return self.lie.generators_M

    @property
    def expected_s_rank(self) -> int:
        return self.lie.dim_g - len(self.lie.g_W_basis)

    def P_gS(self, x: Point) -> Any:
        """Projection 𝔤 → 𝔤_𝒮 along 𝔤_W, as a (dim g × dim g) matrix."""
        mixed = einsum("ki,ji->kj", self.A_W(x), self.V(x))
        return np.eye(self.lie.dim_g) - mixed

    def s_section(self, x: Point, eta: Any) -> Any:
        """(P_gS η)_M at x."""
        return einsum("ki,kj,j->i", self.V(x), self.P_gS(x), eta)

    def S(self, x: Point) -> np.ndarray:
        """Orthonormal rows spanning 𝒮 = 𝒱 ∩ C at x."""
        vectors = einsum("kj,ki->ji", self.P_gS(x), self.V(x))
        basis = row_space_basis(vectors, RANK_RTOL)
        if len(basis) != self.expected_s_rank:
            raise SymmetryError(
                f"S rank collapse: rank {len(basis)}, expected {self.expected_s_rank}", x
            )
        return basis


def build_symmetry_structure(phase: ConstrainedPhase, lie: LieAlgebraData) -> SymmetryStructure:
    rc = phase.C.rank
    g, N = lie.dim_g, phase.M.dim
    w_pos = {k: pos for pos, k in enumerate(lie.g_W_basis)}

    rng = make_rng(config.seed, f"{phase.system.name}/symmetry")
    points = phase.M.sample(rng, config.check_samples)
    validate_lie_data(lie, phase.system, points[:, : phase.q_dim])
    for x in points:
        rank = numerical_rank(np.vstack([value(phase.C(x)), value(lie.generators_M(x))]))
        if rank < N:
            raise SymmetryError(
                f"dimension assumption fails: rank(C + V) = {rank} < dim M = {N}", x
            )

    W_sym = lie.generators_W

    def a_w(x: Point) -> Any:
        F = concatenate([phase.C(x), W_sym(x)], axis=0)
        coeffs = solve(einsum("ij->ji", F), np.eye(N), point=x)
        rows = [coeffs[rc + w_pos[k]] if k in w_pos else np.zeros(N) for k in range(g)]
        return stack(rows)

    A_W = KForm(phase.M, 1, memoized(a_w), (g,))
    dA = exterior_derivative(A_W)
    projectors = complement_projectors(phase.C, W_sym)

    def k_w(x: Point) -> Any:
        pi_c, _ = projectors(x)
        return einsum("glm,li,mj->gij", dA.dense(x), pi_c, pi_c)

    def momentum(x: Point) -> Any:
        J = einsum("gi,i->g", lie.generators_M(x), phase.theta(x))
        return reshape(J, (g, 1))

    structure = SymmetryStructure(
        phase=phase,
        lie=lie,
        A_W=A_W,
        K_W=kform_from_dense(phase.M, 2, memoized(k_w), (g,)),
        J=KForm(phase.M, 0, memoized(momentum), (g,)),
    )
    logger.debug(
        f"Symmetry structure for {phase.system.name}: dim g = {g}, rank S = {structure.expected_s_rank}"
    )
    return structure


def jk_two_form(s: SymmetryStructure) -> KForm:
    """<J, K_W> = Σ_k J_k K_W^k."""
    return pair(s.J, s.K_W)


def dj_wedge_k(s: SymmetryStructure) -> KForm:
    return sum_batch(wedge(exterior_derivative(s.J), s.K_W))


def _psi_dense(s: SymmetryStructure, U: Any, x: Point) -> Any:
    Kt = einsum("gij,ai,bj->abg", s.K_W.dense(x), U, U)
    along = einsum("abg,gc->abc", Kt, s.V(x))
    return along + einsum("bca->abc", along) + einsum("cab->abc", along)


def psi_trivector(s: SymmetryStructure, pi_B: KVector) -> KVector:
    """ψ(α, β, γ) = cyclic γ((K_W(π_B♯α, π_B♯β))_M)."""
    return kvector_from_dense(s.phase.M, 3, lambda x: _psi_dense(s, pi_B.dense(x), x))


def _cyclic(t: np.ndarray) -> np.ndarray:
    return t + np.einsum("bca->abc", t) + np.einsum("cab->abc", t)


def _relative_gap(lhs: np.ndarray, rhs: np.ndarray) -> float:
    if lhs.size == 0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs))))


def verify_jacobiator(
    s: SymmetryStructure, B: KForm, points: Sequence[np.ndarray]
) -> JacobiatorReport:
    """Compare ½[π_B, π_B] with the curvature, momentum-map and vertical-symmetry formulas."""
    phase = s.phase
    B_tilde = project_gauge_form(B, phase)
    pi_B = gauge_transform(nh_bivector(phase), B_tilde)
    lhs_field = jacobiator(pi_B)
    dB = exterior_derivative(B_tilde)
    bold = w_curvature(phase)
    phi_momentum = dB + dj_wedge_k(s)
    phi_vertical = dB + exterior_derivative(jk_two_form(s))

    worst = {"curvature": 0.0, "momentum": 0.0, "vertical": 0.0}
    projection = 0.0
    worst_point: Optional[np.ndarray] = None
    for x in points:
        projection = max(projection, w_contraction(B, phase, x))
        U = value(pi_B.dense(x))
        lhs = value(lhs_field.dense(x))

        Kt = np.einsum("mij,ai,bj->abm", value(bold(x)), U, U)
        curvature = _cyclic(np.einsum("abm,mn,cn->abc", Kt, value(phase.omega.dense(x)), U) - Kt)
        curvature = curvature + np.einsum("ijk,ai,bj,ck->abc", value(dB.dense(x)), U, U, U)

        psi = value(_psi_dense(s, U, x))
        momentum = np.einsum("ijk,ai,bj,ck->abc", value(phi_momentum.dense(x)), U, U, U) - psi
        vertical = np.einsum("ijk,ai,bj,ck->abc", value(phi_vertical.dense(x)), U, U, U) - psi

        gaps = {
            "curvature": _relative_gap(lhs, curvature),
            "momentum": _relative_gap(lhs, momentum),
            "vertical": _relative_gap(lhs, vertical),
        }
        if max(gaps.values()) >= max(worst.values()):
            worst_point = x
        for key, gap in gaps.items():
            worst[key] = max(worst[key], gap)

    if projection > SECTION_TOL:
        logger.warning(f"Gauge form does not annihilate W (|i_Z B| = {projection:.3e}), projected")
    return JacobiatorReport(
        curvature_formula=worst["curvature"],
        momentum_formula=worst["momentum"],
        vertical_formula=worst["vertical"],
        worst_point=None if worst_point is None else as_float_list(worst_point),
        gauge_projection=projection,
    )


@frozen(eq=False)
class NonholonomicMomentumMap:
    structure: SymmetryStructure

    def projection(self, x: Point) -> Any:
        return self.structure.P_gS(x)

    def pairing(self, eta: Any) -> ScalarField:
        """m -> <J^nh(m), P_gS(m) η>."""
        s = self.structure
        eta = np.asarray(eta, dtype=float)

        def fn(x: Point) -> Any:
            J = s.J(x)[:, 0]
            return einsum("k,kj,j->", J, s.P_gS(x), eta)

        return ScalarField(s.phase.M, fn)

    def evaluate(self, x: Point, xi: Any) -> Any:
        """J^nh(m)(ξ) = Θ_M(ξ_M) for ξ ∈ 𝔤_𝒮|_m."""
        s = self.structure
        s.S(x)
        xi = np.asarray(xi, dtype=float)
        off = value(einsum("ki,ji,j->k", s.A_W(x), s.V(x), xi))
        if np.max(np.abs(off)) > SECTION_TOL:
            raise SymmetryError("element is not in g_S at this point", x)
        return einsum("j,ji,i->", xi, s.V(x), s.phase.theta(x))


def nh_momentum_map(s: SymmetryStructure) -> NonholonomicMomentumMap:
    return NonholonomicMomentumMap(s)


# Pointwise property residuals


def curvature_identity_residual(s: SymmetryStructure, x: Point) -> float:
    """K_W(c_a, c_b) + A_W([c_a, c_b]) over the C frame."""
    Cm = value(s.phase.C(x))
    lhs = np.einsum("gij,ai,bj->gab", value(s.K_W.dense(x)), Cm, Cm)
    rhs = -np.einsum("gn,abn->gab", value(s.A_W(x)), value(frame_brackets(s.phase.C)(x)))
    return float(np.max(np.abs(lhs - rhs)))


def semi_basic_residual(phase: ConstrainedPhase, x: Point) -> float:
    """Contraction of the W-curvature 𝐊 with the fibre directions ∂p̂ of τ."""
    bold = value(w_curvature(phase)(x))
    return float(np.max(np.abs(bold[:, phase.q_dim :, :])))


def jk_invariance_residual(s: SymmetryStructure, x: Point) -> float:
    jk = jk_two_form(s)
    worst = 0.0
    for k in range(s.lie.dim_g):
        lie = value(lie_derivative_form(s.V.vector(k), jk)(x))
        worst = max(worst, float(np.max(np.abs(lie))))
    return worst


def vertical_symmetry_residuals(s: SymmetryStructure, x: Point) -> tuple[float, float, float]:
    """(K_W(X, ·) - dA_W(X, ·) for X ∈ C, dK_W on C, dJ∧K_W - d<J, K_W>)."""
    Cm = value(s.phase.C(x))
    dA = exterior_derivative(s.A_W)
    along_c = np.einsum("gij,ai->gaj", value(s.K_W.dense(x)) - value(dA.dense(x)), Cm)
    dK = value(exterior_derivative(s.K_W).dense(x))
    on_c = np.einsum("gijk,ai,bj,ck->gabc", dK, Cm, Cm, Cm)
    wedge_gap = value(dj_wedge_k(s)(x)) - value(exterior_derivative(jk_two_form(s))(x))
    return (
        float(np.max(np.abs(along_c))),
        float(np.max(np.abs(on_c))) if on_c.size else 0.0,
        float(np.max(np.abs(wedge_gap))) if wedge_gap.size else 0.0,
    )


def generator_identity_residual(s: SymmetryStructure, x: Point, eta: Any) -> float:
    """i_{η_M} Ω_M = <dJ, η> for η given by its value at x."""
    eta = np.asarray(eta, dtype=float)
    V = value(s.V(x))
    lhs = np.einsum("k,ki,ij->j", eta, V, value(s.phase.omega.dense(x)))
    dJ = value(exterior_derivative(s.J)(x))
    return float(np.max(np.abs(lhs - eta @ dJ)))


def equivariance_residual(s: SymmetryStructure, x: Point) -> float:
    """dJ_j(η^i_M) + Σ_k c^k_{ij} J_k for every pair (i, j)."""
    dJ = value(exterior_derivative(s.J)(x))
    J = value(s.J(x))[:, 0]
    V = value(s.V(x))
    along = np.einsum("jn,in->ij", dJ, V)
    bracket = np.einsum("kij,k->ij", s.lie.structure_constants, J)
    return float(np.max(np.abs(along + bracket)))


def d_dj_wedge_k_closedness(s: SymmetryStructure, x: Point) -> float:
    dd = value(exterior_derivative(dj_wedge_k(s))(x))
    return float(np.max(np.abs(dd))) if dd.size else 0.0


def bold_curvature_matches(s: SymmetryStructure, x: Point) -> float:
    """𝐊 = (K_W)_M: the phase-level W-curvature against the Lie algebra valued one."""
    bold = value(w_curvature(s.phase)(x))
    via_algebra = np.einsum("gij,gm->mij", value(s.K_W.dense(x)), value(s.V(x)))
    return float(np.max(np.abs(bold - via_algebra)))
