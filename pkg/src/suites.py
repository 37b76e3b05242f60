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

from collections.abc import Callable, Sequence
from functools import cached_property
from typing import Any, Optional

import numpy as np
from attrs import define

from .calculus import (
    Chart,
    ScalarField,
    derivative_agreement,
    differential,
    exterior_derivative,
    jacobian,
    jacobiator,
    jacobiator_cyclic,
    pushed_vector,
)
from .config import config
from .constants import (
    DERIVATIVE_AGREEMENT_TOL,
    DET_THRESHOLD,
    ENERGY_DRIFT_TOL,
    FIELD_TOL,
    MONITOR_DRIFT_TOL,
    ORACLE_TOL,
    ORDER_CHECK_DT,
    ORDER_CHECK_T_END,
    REFERENCE_TOL,
    RK4_MIN_ORDER_RATIO,
    SECTION_TOL,
    TWISTED_TOL,
    WITNESS_FLOOR,
)
from .dual import value
from .dynamics import drift_ratio, integrate, monitor_drift, order_ratio
from .errors import SuiteError
from .examples import ExampleBundle, ExpectedField
from .gauge import check_dynamical_gauge, project_gauge_form
from .logger import logger
from .mechanics import (
    constrained_hamiltonian_field,
    nh_bivector,
    nh_equation_residual,
    nh_hamel_field,
    nh_vector_field,
)
from .models import CheckResult, RunConfig, SuiteName, SuiteResult
from .reduction import (
    ReducedBundle,
    bates_sniatycki_check,
    build_reduced_bundle,
    casimir_residual,
    kernel_residual,
    poisson_map_residual,
    presymplectic_reduction,
    pi_jk_by_gauge,
    psi_report,
    quotient_residuals,
    reduce_bivector,
    reduce_form,
    reduce_vector_field,
    reduced_dynamics_gauge_check,
    reduced_jacobiator_residual,
    section_independence_residual,
)
from .symmetry import (
    bold_curvature_matches,
    curvature_identity_residual,
    d_dj_wedge_k_closedness,
    equivariance_residual,
    frame_invariance_residual,
    generator_identity_residual,
    jk_invariance_residual,
    jk_two_form,
    nh_momentum_map,
    semi_basic_residual,
    verify_jacobiator,
    vertical_symmetry_residuals,
)
from .utils import as_float_list, make_rng

Computed = Callable[[np.ndarray], np.ndarray]


@define(slots=False)
class SuiteContext:
    """Sample points and lazily built reduced data shared by the checks of one suite."""

    bundle: ExampleBundle
    rng: np.random.Generator
    tol: float
    points: list[np.ndarray]
    base_points: list[np.ndarray]
    base0_points: list[np.ndarray]

    @property
    def scale(self) -> float:
        return self.tol / REFERENCE_TOL

    @property
    def check_points(self) -> list[np.ndarray]:
        return self.points[: config.check_samples]

    @cached_property
    def reduced(self) -> ReducedBundle:
        b = self.bundle
        return build_reduced_bundle(b.phase, b.structure, b.quotient, b.phase0, b.quotient0)

    def bound(
        self,
        name: str,
        residual: float,
        threshold: float,
        worst_point: Optional[Any] = None,
        note: Optional[str] = None,
    ) -> CheckResult:
        """A residual that must stay below ``threshold`` times the tolerance scale."""
        limit = threshold * self.scale
        return CheckResult(
            name=name,
            residual=float(residual),
            threshold=limit,
            passed=bool(np.isfinite(residual) and residual <= limit),
            worst_point=None if worst_point is None else as_float_list(worst_point),
            note=note,
        )


def witness(
    name: str, residual: float, floor: float, point: Optional[Any] = None, note: Optional[str] = None
) -> CheckResult:
    """A quantity that must stay above ``floor``: evidence that something fails."""
    return CheckResult(
        name=name,
        kind="witness",
        residual=float(residual),
        threshold=floor,
        passed=bool(np.isfinite(residual) and residual > floor),
        worst_point=None if point is None else as_float_list(point),
        note=note,
    )


def info(name: str, residual: float, note: Optional[str] = None) -> CheckResult:
    return CheckResult(
        name=name, kind="info", residual=float(residual), threshold=0.0, passed=True, note=note
    )


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _relative(expected: np.ndarray, got: np.ndarray) -> float:
    return _max_abs(expected - got) / max(1.0, _max_abs(expected))


def _worst(
    gap: Callable[[np.ndarray], float], points: Sequence[np.ndarray]
) -> tuple[float, Optional[np.ndarray]]:
    worst, worst_point = 0.0, None
    for x in points:
        g = gap(x)
        if not np.isfinite(g) or g >= worst:
            worst, worst_point = g, x
            if not np.isfinite(g):
                break
    return worst, worst_point


# Closed-form comparisons


def _display_value(bundle: ExampleBundle, field: ExpectedField, got: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Express a field computed in the M chart in the display chart at the image of x."""
    if field.kind == "bivector":
        T = value(jacobian(bundle.to_display.fn, x, bundle.phase.M))
        return T @ got @ T.T
    if field.kind in ("two_form", "batched_two_form"):
        d = value(bundle.to_display(x))
        T = value(jacobian(bundle.from_display.fn, d, bundle.display))
        return np.einsum("ia,...ij,jb->...ab", T, got, T)
    return got


def _base_value(bundle: ExampleBundle, field: ExpectedField, got: np.ndarray, b: np.ndarray) -> np.ndarray:
    if field.kind == "two_form" and bundle.base_projector is not None and field.role == "base":
        P = bundle.base_projector(b)
        return P.T @ got @ P
    return got


def expected_check(ctx: SuiteContext, name: str, computed: Computed) -> Optional[CheckResult]:
    """Compare a bundle's closed-form field with the computed one over the suite samples."""
    bundle = ctx.bundle
    field = bundle.expected.get(name)
    if field is None:
        return None

    if field.role == "display":

        def gap(x: np.ndarray) -> float:
            got = _display_value(bundle, field, np.asarray(computed(x), dtype=float), x)
            expected = field.fn(np.asarray(value(bundle.to_display(x)), dtype=float))
            return _relative(expected, got)

        points = ctx.points
    else:

        def gap(b: np.ndarray) -> float:
            got = _base_value(bundle, field, np.asarray(computed(b), dtype=float), b)
            expected = _base_value(bundle, field, np.asarray(field.fn(b), dtype=float), b)
            return _relative(expected, got)

        points = ctx.base0_points if field.role == "base0" else ctx.base_points

    residual, point = _worst(gap, points)
    return ctx.bound(f"expected_{name}", residual, FIELD_TOL, point, note=f"provenance: {field.provenance}")


def _with_expected(ctx: SuiteContext, checks: list[CheckResult], fields: dict[str, Computed]) -> None:
    for name, computed in fields.items():
        check = expected_check(ctx, name, computed)
        if check is not None:
            checks.append(check)


# Suites


def jacobiator_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    s, phase = bundle.structure, bundle.phase
    report = verify_jacobiator(s, bundle.gauge_form, ctx.points)
    checks = [
        ctx.bound("curvature_formula", report.curvature_formula, REFERENCE_TOL, report.worst_point),
        ctx.bound("momentum_formula", report.momentum_formula, REFERENCE_TOL, report.worst_point),
    ]
    if report.vertical_formula is not None:
        checks.append(
            ctx.bound("vertical_formula", report.vertical_formula, REFERENCE_TOL, report.worst_point)
        )
    checks.append(info("gauge_projection", report.gauge_projection))

    pi_nh = nh_bivector(phase)
    direct, cyclic = jacobiator(pi_nh), jacobiator_cyclic(pi_nh)
    residual, point = _worst(
        lambda x: _relative(value(direct.dense(x)), value(cyclic.dense(x))), ctx.check_points
    )
    checks.append(ctx.bound("cyclic_formula", residual, ORACLE_TOL, point))

    if bundle.name == "ball_rank0":
        residual, point = _worst(lambda x: _max_abs(value(direct.dense(x))), ctx.points)
        checks.append(ctx.bound("free_body_poisson", residual, FIELD_TOL, point))

    residual, point = _worst(lambda x: curvature_identity_residual(s, x), ctx.points)
    checks.append(ctx.bound("curvature_identity", residual, FIELD_TOL, point))
    residual, point = _worst(lambda x: equivariance_residual(s, x), ctx.points)
    checks.append(ctx.bound("equivariance", residual, FIELD_TOL, point))

    agreement = derivative_agreement(pi_nh.dense, phase.M, np.asarray(ctx.check_points))
    checks.append(ctx.bound("derivative_agreement", agreement, DERIVATIVE_AGREEMENT_TOL))

    _with_expected(ctx, checks, {"pi_nh": lambda x: value(pi_nh.dense(x))})
    return checks


def jk_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    s, phase = bundle.structure, bundle.phase
    g = s.lie.dim_g
    jk = jk_two_form(s)
    momentum = nh_momentum_map(s)
    pairings = [momentum.pairing(np.eye(g)[j]) for j in range(g)]

    checks: list[CheckResult] = []
    for name, fn in (
        ("frame_invariance", lambda x: frame_invariance_residual(phase, s.lie, x)),
        ("jk_invariance", lambda x: jk_invariance_residual(s, x)),
        ("semi_basic", lambda x: semi_basic_residual(phase, x)),
        ("curvature_as_algebra", lambda x: bold_curvature_matches(s, x)),
        ("vertical_symmetry", lambda x: max(vertical_symmetry_residuals(s, x))),
        (
            "generator_identity",
            lambda x: max(generator_identity_residual(s, x, e) for e in np.eye(g)),
        ),
    ):
        residual, point = _worst(fn, ctx.points)
        checks.append(ctx.bound(name, residual, FIELD_TOL, point))

    closedness, _ = _worst(lambda x: d_dj_wedge_k_closedness(s, x), ctx.check_points)
    checks.append(info("dj_wedge_k_closedness", closedness, note="d(dJ∧K_W) at sample points"))

    _with_expected(
        ctx,
        checks,
        {
            "J": lambda x: value(s.J(x))[:, 0],
            "K_W": lambda x: value(s.K_W.dense(x)),
            "jk": lambda x: value(jk.dense(x)),
            "nh_pairing": lambda x: np.array([float(value(f(x))) for f in pairings]),
            "jk_red": lambda b: value(reduce_form(jk, bundle.quotient).dense(b)),
        },
    )
    return checks


def lambda_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    s, phase = bundle.structure, bundle.phase
    reduced = ctx.reduced
    annihilator = reduced.annihilator
    checks: list[CheckResult] = []

    for name, pi, points in (
        ("lambda_poisson", reduced.Lambda, ctx.base_points),
        ("lambda0_poisson", reduced.Lambda0, ctx.base0_points),
    ):
        jac = jacobiator(pi)
        residual, point = _worst(lambda b: _max_abs(value(jac.dense(b))), points)
        checks.append(ctx.bound(name, residual, FIELD_TOL, point))

    residual, point = _worst(
        lambda b: _max_abs(presymplectic_reduction(annihilator, b) - value(reduced.Lambda0.dense(b))),
        ctx.base0_points,
    )
    checks.append(ctx.bound("presymplectic_route", residual, ORACLE_TOL, point))

    by_gauge = pi_jk_by_gauge(phase, s)
    residual, point = _worst(
        lambda x: _relative(value(reduced.pi_JK.dense(x)), value(by_gauge.dense(x))), ctx.points
    )
    checks.append(ctx.bound("gauge_route", residual, FIELD_TOL, point))

    residual = section_independence_residual(
        reduced.pi_JK, bundle.quotient, s.V, ctx.base_points[: config.check_samples], ctx.rng
    )
    checks.append(ctx.bound("section_independence", residual, FIELD_TOL))

    section, vertical = quotient_residuals(bundle.quotient, s.V, ctx.base_points)
    checks.append(ctx.bound("quotient_section", section, SECTION_TOL))
    checks.append(ctx.bound("quotient_vertical", vertical, SECTION_TOL))
    section0, vertical0 = quotient_residuals(bundle.quotient0, annihilator.structure0.V, ctx.base0_points)
    checks.append(ctx.bound("quotient0_section", section0, SECTION_TOL))
    checks.append(ctx.bound("quotient0_vertical", vertical0, SECTION_TOL))

    points0 = [value(bundle.quotient0.sigma(b)) for b in ctx.base0_points]
    residual, point = _worst(lambda x: kernel_residual(bundle.phase0, x), points0)
    checks.append(ctx.bound("annihilator_kernel", residual, FIELD_TOL, point))

    pi_nh_red = reduce_bivector(nh_bivector(phase), bundle.quotient)
    X_red = reduce_vector_field(nh_vector_field(phase), bundle.quotient)
    _with_expected(
        ctx,
        checks,
        {
            "Lambda": lambda b: value(reduced.Lambda.dense(b)),
            "Lambda0": lambda b: value(reduced.Lambda0.dense(b)),
            "pi_nh_red": lambda b: value(pi_nh_red.dense(b)),
            "X_red": lambda b: value(X_red(b)),
        },
    )
    return checks


def psi_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    phase, phase0 = bundle.phase, bundle.phase0
    reduced = ctx.reduced
    report = psi_report(phase, bundle.structure, reduced.annihilator, reduced.Psi, ctx.points)
    checks = [
        witness("diffeomorphism", report.diffeomorphism_min_det, DET_THRESHOLD, note="min |det dΨ|"),
        ctx.bound("constraint_distribution", report.constraint_distribution, FIELD_TOL),
        ctx.bound("two_form_on_c", report.two_form_on_c, FIELD_TOL),
        ctx.bound("bivector_push", report.bivector_push, FIELD_TOL),
        ctx.bound("adapted_coordinates", report.adapted_coordinates, FIELD_TOL),
        ctx.bound("momentum_pairing", report.momentum_pairing, ORACLE_TOL),
        ctx.bound("hamiltonian_pairing", report.hamiltonian_pairing, FIELD_TOL),
    ]
    residual = poisson_map_residual(reduced.Psi_red, reduced.Lambda, reduced.Lambda0, ctx.base_points)
    checks.append(ctx.bound("reduced_poisson_map", residual, FIELD_TOL))

    system = phase.system
    n = phase.q_dim

    def adapted(x: np.ndarray) -> np.ndarray:
        q = x[:n]
        p0 = value(phase0.canonical_momenta(value(reduced.Psi(x))))
        W = value(system.frame_W(q))
        D = value(system.frame_D(q))
        return np.concatenate([W @ p0, D @ p0])

    _with_expected(
        ctx,
        checks,
        {"Psi_adapted": adapted, "Psi_red": lambda b: value(reduced.Psi_red(b))},
    )
    return checks


def casimir_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    reduced = ctx.reduced
    checks = []
    for name, f in bundle.casimirs.items():
        residual = casimir_residual(reduced.Lambda, f, ctx.base_points)
        checks.append(ctx.bound(f"casimir_{name}", residual, FIELD_TOL))
    for name, f in bundle.casimirs0.items():
        residual = casimir_residual(reduced.Lambda0, f, ctx.base0_points)
        checks.append(ctx.bound(f"casimir0_{name}", residual, FIELD_TOL))
    if bundle.nh_non_casimirs:
        pi_nh_red = reduce_bivector(nh_bivector(bundle.phase), bundle.quotient)
        for name in bundle.nh_non_casimirs:
            residual = casimir_residual(pi_nh_red, bundle.casimirs[name], ctx.base_points)
            checks.append(witness(f"not_casimir_nh_{name}", residual, WITNESS_FLOOR))

    # Leaf functions that the flow does not preserve
    X_nh = nh_vector_field(bundle.phase)
    x0 = bundle.initial_state()
    for name, f in bundle.monitors.items():
        if name in bundle.conserved:
            continue
        rate = abs(float(value(differential(f)(x0)) @ value(X_nh(x0))))
        checks.append(witness(f"not_conserved_{name}", rate, WITNESS_FLOOR, x0))
    return checks


def dynamics_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    phase = bundle.phase
    X_nh = nh_vector_field(phase)
    X_fast = nh_hamel_field(phase)
    x0 = bundle.initial_state()
    checks: list[CheckResult] = []
    residual, point = _worst(
        lambda x: _relative(value(X_nh(x)), value(X_fast(x))), ctx.check_points + [x0]
    )
    checks.append(ctx.bound("hamel_form", residual, FIELD_TOL, point))

    traj = integrate(
        X_fast, x0, config.dynamics_t_end, config.dynamics_dt, "rk4", monitors=bundle.monitors
    )
    if traj.error is not None:
        checks.append(ctx.bound("integration", np.inf, 0.0, traj.final_state, note=traj.error))
        return checks

    for name in bundle.monitors:
        drift = monitor_drift(traj, name)
        if name == "H":
            checks.append(ctx.bound("drift_H", drift, ENERGY_DRIFT_TOL, x0))
        elif name in bundle.conserved:
            checks.append(ctx.bound(f"drift_{name}", drift, MONITOR_DRIFT_TOL, x0))
        else:
            checks.append(witness(f"drift_{name}", drift, WITNESS_FLOOR, x0))

    ratio = order_ratio(X_fast, x0, ORDER_CHECK_T_END, ORDER_CHECK_DT)
    note = "error(dt) / error(dt/2) against a dt/8 run"
    if np.isinf(ratio):
        checks.append(info("rk4_order", ratio, note="coarse step already exact to round-off"))
    elif bundle.name == "particle":
        checks.append(witness("rk4_order", ratio, RK4_MIN_ORDER_RATIO, x0, note=note))
    else:
        checks.append(info("rk4_order", ratio, note=note))
    if "H" in bundle.monitors:
        ratio = drift_ratio(X_fast, x0, phase.H, ORDER_CHECK_T_END, ORDER_CHECK_DT)
        checks.append(info("rk4_drift_ratio", ratio, note="drift_H(dt) / drift_H(dt/2)"))

    oracle = constrained_hamiltonian_field(phase.system, phase.cotangent)
    pushed = pushed_vector(phase.iota, X_nh)
    residual, point = _worst(
        lambda x: _relative(value(oracle(value(phase.iota(x)))), value(pushed(x))), ctx.check_points
    )
    checks.append(ctx.bound("lagrange_multiplier_oracle", residual, FIELD_TOL, point))
    residual, point = _worst(lambda x: nh_equation_residual(phase, X_nh, x), ctx.points)
    checks.append(ctx.bound("nh_equation", residual, FIELD_TOL, point))

    if bundle.base_projector is not None:
        quotient = bundle.quotient
        X_red = reduce_vector_field(X_fast, quotient)
        b0 = np.asarray(value(quotient.rho(x0)), dtype=float)
        unit = {"gamma_norm": _gamma_norm(quotient.base)}
        reduced_traj = integrate(
            X_red, b0, config.dynamics_t_end, config.dynamics_dt, "rk4", monitors=unit
        )
        drift = np.inf if reduced_traj.error else monitor_drift(reduced_traj, "gamma_norm")
        checks.append(ctx.bound("reduced_flow_tangency", drift, MONITOR_DRIFT_TOL, b0))
    return checks


def _gamma_norm(chart: Chart) -> ScalarField:
    return ScalarField(chart, lambda b: b[0] * b[0] + b[1] * b[1] + b[2] * b[2])


def twisted_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    s, phase = bundle.structure, bundle.phase
    reduced = ctx.reduced
    report = reduced_dynamics_gauge_check(
        phase, s, bundle.gauge_form, bundle.quotient, reduced.Lambda, ctx.points, ctx.base_points
    )
    checks = [
        info("basic_contraction", report.basic_contraction),
        info("basic_lie", report.basic_lie),
    ]
    if report.dynamical is not None:
        checks.append(ctx.bound("dynamical_gauge", report.dynamical, FIELD_TOL))
    if report.is_basic:
        checks.append(ctx.bound("reduced_gauge", report.gauge_residual or 0.0, FIELD_TOL))
        checks.append(ctx.bound("twisted_poisson", report.twisted_residual or 0.0, TWISTED_TOL))
        checks.append(info("twisting_closedness", report.twisted_closedness or 0.0))
        checks.append(ctx.bound("conserved_pairings", report.conserved or 0.0, FIELD_TOL))
    else:
        checks.append(info("reduced_gauge", 0.0, note="B + <J, K_W> is not basic"))

    residual = reduced_jacobiator_residual(phase, s, bundle.gauge_form, bundle.quotient, ctx.base_points)
    checks.append(ctx.bound("reduced_jacobiator", residual, REFERENCE_TOL))

    beta = project_gauge_form(bundle.gauge_form, phase) + jk_two_form(s)
    calB = reduce_form(beta, bundle.quotient)
    _with_expected(ctx, checks, {"B_red": lambda b: value(calB.dense(b))})
    return checks


def bates_sniatycki_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    report = bates_sniatycki_check(bundle.phase, bundle.structure, bundle.quotient, ctx.base_points)
    return [
        ctx.bound("reduced_closedness_identity", report.residual, REFERENCE_TOL, report.worst_point),
        info("total_closedness", report.closedness),
    ]


def gauge_suite(ctx: SuiteContext) -> list[CheckResult]:
    bundle = ctx.bundle
    s, phase = bundle.structure, bundle.phase
    pi_nh = nh_bivector(phase)
    X_nh = nh_vector_field(phase, pi_nh)
    B = project_gauge_form(bundle.gauge_form, phase)
    report = check_dynamical_gauge(B, X_nh, ctx.points, pi=pi_nh)
    checks = [
        ctx.bound("dynamical_gauge", report.max_residual, FIELD_TOL, report.worst_point),
        witness("gauge_invertible", report.min_det, DET_THRESHOLD, note="min |det(Id + B♭π♯)|"),
    ]

    w = bundle.witness_point
    if w is None:
        return checks
    x = np.asarray(value(bundle.from_display(w)), dtype=float)
    jk = jk_two_form(s)

    if _max_abs(value(bundle.gauge_form.dense(x))) == 0.0:
        contraction = check_dynamical_gauge(jk, X_nh, [x]).max_residual
        checks.append(witness("jk_not_dynamical", contraction, WITNESS_FLOOR, x))

    if s.expected_s_rank > 0:
        d_jk = value(exterior_derivative(jk).dense(x))
        g = s.lie.dim_g
        along = max(
            _max_abs(np.einsum("i,ijk->jk", value(s.s_section(x, e)), d_jk)) for e in np.eye(g)
        )
        checks.append(witness("djk_on_S", along, WITNESS_FLOOR, x))
    return checks


SUITES: dict[SuiteName, Callable[[SuiteContext], list[CheckResult]]] = {
    "jacobiator": jacobiator_suite,
    "jk": jk_suite,
    "lambda": lambda_suite,
    "psi": psi_suite,
    "casimir": casimir_suite,
    "dynamics": dynamics_suite,
    "twisted": twisted_suite,
    "bates_sniatycki": bates_sniatycki_suite,
    "gauge": gauge_suite,
}


def make_context(bundle: ExampleBundle, name: str, run: RunConfig) -> SuiteContext:
    rng = make_rng(run.seed, name)
    return SuiteContext(
        bundle=bundle,
        rng=rng,
        tol=run.tol,
        points=list(bundle.phase.M.sample(rng, run.samples)),
        base_points=list(bundle.quotient.base.sample(rng, run.samples)),
        base0_points=list(bundle.quotient0.base.sample(rng, run.samples)),
    )


def summarize(name: SuiteName, checks: list[CheckResult], run: RunConfig) -> SuiteResult:
    bounds = [c for c in checks if c.kind == "bound"]
    worst = max(bounds, key=lambda c: c.residual / c.threshold if c.threshold else np.inf, default=None)
    return SuiteResult(
        name=name,
        max_residual=max((c.residual for c in bounds), default=0.0),
        tolerance=run.tol,
        passed=all(c.passed for c in checks),
        samples=run.samples,
        seed=run.seed,
        worst_point=None if worst is None else worst.worst_point,
        checks=checks,
    )


def run_suite(bundle: ExampleBundle, name: str, run: RunConfig) -> SuiteResult:
    if name not in SUITES:
        raise SuiteError(f"unknown suite '{name}' (known: {', '.join(SUITES)})")
    suite: SuiteName = name  # type: ignore
    logger.info(f"Running suite {suite} on {bundle.name} ({run.samples} samples, seed {run.seed})")
    checks = SUITES[suite](make_context(bundle, suite, run))
    result = summarize(suite, checks, run)
    status = "passed" if result.passed else "FAILED"
    logger.info(f"Suite {suite} on {bundle.name} {status}: max residual {result.max_residual:.3e}")
    return result


def failed_suite(name: SuiteName, run: RunConfig, error: BaseException) -> SuiteResult:
    message = str(error) if str(error).startswith("Error:") else f"Error: {error}"
    return SuiteResult(
        name=name,
        max_residual=float("inf"),
        tolerance=run.tol,
        passed=False,
        samples=run.samples,
        seed=run.seed,
        error=message,
    )
