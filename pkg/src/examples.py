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
from typing import Any, Literal, Optional

import numpy as np
from attrs import frozen

from .calculus import (
    Chart,
    Frame,
    KForm,
    MatrixField,
    Point,
    ScalarField,
    SmoothMap,
    kform_from_dense,
    zero_form,
)
from .config import config
from .dual import arccos, arctan2, concatenate, cos, einsum, sin, sqrt, stack, total
from .errors import ExampleError
from .linalg import solve
from .logger import logger
from .mechanics import ConstrainedPhase, MechanicalSystem, build_constrained_phase
from .models import ExampleName, Provenance, SuiteName, example_names, suite_names
from .reduction import QuotientChart, annihilator_phase
from .symmetry import (
    LieAlgebraData,
    SymmetryStructure,
    build_symmetry_structure,
    jk_two_form,
    make_lie_data,
)

ChartRole = Literal["display", "base", "base0"]
FieldKind = Literal["bivector", "two_form", "batched_two_form", "values", "vector", "map"]

TWO_PI = 2 * np.pi
SNAKEBOARD_PHI_MARGIN = 0.3
BALL_TILT_MARGIN = 0.2
PARTICLE_BOX = 1.5

# Constraint matrices of the rolling rigid body, by rank
BALL_MATRICES = {
    0: np.zeros((3, 3)),
    1: np.diag([0.0, 0.0, 1.0]),
    2: np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    3: np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
}

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0


@frozen(eq=False)
class ExpectedField:
    """A closed-form field to compare against the computed one.

    ``fn`` takes plain coordinates of the chart named by ``role`` and returns dense
    components: a matrix for bivectors and 2-forms, (g, n, n) for batched 2-forms,
    a vector otherwise.
    """

    name: str
    role: ChartRole
    kind: FieldKind
    fn: Callable[[np.ndarray], np.ndarray]
    provenance: Provenance


@frozen(eq=False)
class ExampleBundle:
    """Everything the suites need about one mechanical example.

    ``display`` is the chart the closed-form formulas are written in; points of M
    map to it through ``to_display``. ``casimirs`` live on the base of M/G,
    ``casimirs0`` on the base of W°/G and ``monitors`` on M. ``nh_non_casimirs`` names
    Casimirs of the gauged bracket that the plain reduced nonholonomic bracket moves.
    """

    name: ExampleName
    parameters: dict[str, float]
    system: MechanicalSystem
    phase: ConstrainedPhase
    structure: SymmetryStructure
    quotient: QuotientChart
    phase0: ConstrainedPhase
    quotient0: QuotientChart
    display: Chart
    to_display: SmoothMap
    from_display: SmoothMap
    expected: dict[str, ExpectedField]
    gauge_form: KForm
    casimirs: dict[str, ScalarField]
    casimirs0: dict[str, ScalarField]
    monitors: dict[str, ScalarField]
    conserved: tuple[str, ...]
    x0: np.ndarray
    nh_non_casimirs: tuple[str, ...] = ()
    chaplygin: bool = False
    gauge_suite: bool = False
    witness_point: Optional[np.ndarray] = None
    base_projector: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def lie(self) -> LieAlgebraData:
        return self.structure.lie

    def initial_state(self) -> np.ndarray:
        return np.asarray(self.from_display(self.x0), dtype=float)


# Shared construction helpers


def _bivector(n: int, entries: Sequence[tuple[int, int, float]]) -> np.ndarray:
    P = np.zeros((n, n))
    for i, j, v in entries:
        P[i, j] += v
        P[j, i] -= v
    return P


def _two_form(n: int, entries: Sequence[tuple[int, int, float]]) -> np.ndarray:
    return _bivector(n, entries)


def _zero_vector_fields(chart: Chart, rows: np.ndarray) -> Frame:
    fixed = np.asarray(rows, dtype=float)
    return Frame(chart, len(fixed), lambda q: fixed)


def _frame_momenta_charts(
    phase: ConstrainedPhase,
    prefix: str,
    q_names: tuple[str, ...],
    q_box: tuple[tuple[float, float], ...],
    q_periodic: tuple[bool, ...],
    momentum_names: tuple[str, ...],
    project: Callable[[Any], Any],
    lift: Callable[[Any], Any],
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
) -> QuotientChart:
    """Quotient chart with coordinates (invariant configuration part, frame momenta)."""
    n = phase.q_dim
    k = len(q_names)
    p = config.momentum_range
    base = Chart(
        name=f"{prefix}/base",
        coord_names=q_names + momentum_names,
        sample_box=q_box + tuple((-p, p) for _ in momentum_names),
        periodic=q_periodic + tuple(False for _ in momentum_names),
        sampler=sampler,
    )

    def rho(x: Point) -> Any:
        return concatenate([project(x[:n]), phase.frame_momenta(x)])

    def sigma(b: Point) -> Any:
        return phase.point_from_frame_momenta(lift(b[:k]), b[k:])

    return QuotientChart(phase.M, base, SmoothMap(phase.M, base, rho), SmoothMap(base, phase.M, sigma))


def _frame_momenta_display(
    phase: ConstrainedPhase, momentum_names: tuple[str, ...]
) -> tuple[Chart, SmoothMap, SmoothMap]:
    """Chart (q, p̃) with p̃ the momenta along the unnormalized D frame."""
    Q = phase.system.Q
    n = Q.dim
    p = config.momentum_range
    display = Chart(
        name=f"{phase.system.name}/display",
        coord_names=Q.coord_names + momentum_names,
        sample_box=Q.sample_box + tuple((-p, p) for _ in momentum_names),
        periodic=Q.periodic + tuple(False for _ in momentum_names),
    )
    to_display = SmoothMap(
        phase.M, display, lambda x: concatenate([x[:n], phase.frame_momenta(x)])
    )
    from_display = SmoothMap(
        display, phase.M, lambda d: phase.point_from_frame_momenta(d[:n], d[n:])
    )
    return display, to_display, from_display


def _adapted_psi(n: int, k: int) -> Callable[[np.ndarray], np.ndarray]:
    """Ψ(q, p̃) paired with (W frame, D frame): the W part vanishes and p̃ is kept."""
    return lambda d: np.concatenate([np.zeros(k), d[n:]])


def _identity(d: np.ndarray) -> np.ndarray:
    return np.asarray(d, dtype=float)


def _identity_map(role: ChartRole = "base") -> ExpectedField:
    return ExpectedField("Psi_red", role, "map", _identity, "literature")


def _assemble(
    name: ExampleName,
    parameters: dict[str, float],
    system: MechanicalSystem,
    generators: Frame,
    structure_constants: np.ndarray,
    g_W: Sequence[int],
) -> tuple[ConstrainedPhase, SymmetryStructure, ConstrainedPhase]:
    phase = build_constrained_phase(system)
    lie = make_lie_data(phase, generators, structure_constants, g_W)
    structure = build_symmetry_structure(phase, lie)
    phase0 = annihilator_phase(system)
    logger.debug(f"Assembled example {name} with parameters {parameters}")
    return phase, structure, phase0


# The nonholonomic particle


def _particle(name: ExampleName, parameters: dict[str, float], chaplygin: bool) -> ExampleBundle:
    box = ((-PARTICLE_BOX, PARTICLE_BOX),) * 3
    Q = Chart(f"{name}/Q", ("x", "y", "z"), box)

    def constraint(q: Point) -> Any:
        return stack([-q[1], 0.0, 1.0])

    system = MechanicalSystem(
        name=name,
        Q=Q,
        kappa=MatrixField(Q, lambda q: np.eye(3)),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=(KForm(Q, 1, constraint),),
        frame_D=Frame(Q, 2, lambda q: stack([stack([1.0, 0.0, q[1]]), np.array([0.0, 1.0, 0.0])])),
        frame_W=_zero_vector_fields(Q, np.array([[0.0, 0.0, 1.0]])),
    )
    if chaplygin:
        generators = _zero_vector_fields(Q, np.array([[0.0, 0.0, 1.0]]))
        c = np.zeros((1, 1, 1))
        g_W: tuple[int, ...] = (0,)
    else:
        generators = _zero_vector_fields(Q, np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
        c = np.zeros((2, 2, 2))
        g_W = (1,)
    phase, structure, phase0 = _assemble(name, parameters, system, generators, c, g_W)

    # Display chart: canonical momenta (p_x, p_y); p_z = y p_x on M
    p = config.momentum_range
    display = Chart(
        f"{name}/display",
        ("x", "y", "z", "p_x", "p_y"),
        box + ((-p, p), (-p, p)),
    )

    def to_display_fn(x: Point) -> Any:
        return concatenate([x[:3], stack([x[3] / sqrt(1.0 + x[1] * x[1]), x[4]])])

    def from_display_fn(d: Point) -> Any:
        return concatenate([d[:3], stack([d[3] * sqrt(1.0 + d[1] * d[1]), d[4]])])

    to_display = SmoothMap(phase.M, display, to_display_fn)
    from_display = SmoothMap(display, phase.M, from_display_fn)

    lead: tuple[str, ...] = ("x",) if chaplygin else ()
    lead_box = ((-PARTICLE_BOX, PARTICLE_BOX),) if chaplygin else ()
    k = len(lead)

    def base_chart(suffix: str, momenta: tuple[str, str]) -> Chart:
        return Chart(
            f"{name}/{suffix}",
            lead + ("y",) + momenta,
            lead_box + ((-PARTICLE_BOX, PARTICLE_BOX), (-p, p), (-p, p)),
        )

    def lead_of(x: Point) -> list[Any]:
        return [x[0]] if chaplygin else []

    def section(b: Point, scale: Callable[[Any], Any]) -> Any:
        y = b[k]
        x_coord = b[0] if chaplygin else 0.0
        return stack([x_coord, y, 0.0, scale(y) * b[k + 1], b[k + 2]])

    base = base_chart("base", ("p_x", "p_y"))
    quotient = QuotientChart(
        phase.M,
        base,
        SmoothMap(
            phase.M,
            base,
            lambda x: stack(lead_of(x) + [x[1], x[3] / sqrt(1.0 + x[1] * x[1]), x[4]]),
        ),
        SmoothMap(base, phase.M, lambda b: section(b, lambda y: sqrt(1.0 + y * y))),
    )
    base0 = base_chart("base0", ("p~_x", "p~_y"))
    quotient0 = QuotientChart(
        phase0.M,
        base0,
        SmoothMap(
            phase0.M,
            base0,
            lambda x: stack(lead_of(x) + [x[1], x[3] * sqrt(1.0 + x[1] * x[1]), x[4]]),
        ),
        SmoothMap(base0, phase0.M, lambda b: section(b, lambda y: 1.0 / sqrt(1.0 + y * y))),
    )

    def pi_nh(d: np.ndarray) -> np.ndarray:
        y, px = d[1], d[3]
        s = 1.0 + y * y
        return _bivector(5, [(0, 3, 1 / s), (2, 3, y / s), (1, 4, 1.0), (3, 4, -y * px / s)])

    def momentum(d: np.ndarray) -> np.ndarray:
        y, px = d[1], d[3]
        return np.array([y * px]) if chaplygin else np.array([px, y * px])

    def curvature(d: np.ndarray) -> np.ndarray:
        dxdy = _two_form(5, [(0, 1, 1.0)])
        return dxdy[None] if chaplygin else np.stack([np.zeros((5, 5)), dxdy])

    def jk(d: np.ndarray) -> np.ndarray:
        return _two_form(5, [(0, 1, d[1] * d[3])])

    def pairing(d: np.ndarray) -> np.ndarray:
        y, px = d[1], d[3]
        return np.array([0.0]) if chaplygin else np.array([(1 + y * y) * px, 0.0])

    def psi_adapted(d: np.ndarray) -> np.ndarray:
        y, px, py = d[1], d[3], d[4]
        return np.array([0.0, (1 + y * y) * px, py])

    nb = base.dim

    def reduced(factor: float) -> Callable[[np.ndarray], np.ndarray]:
        def fn(b: np.ndarray) -> np.ndarray:
            y, px = b[k], b[k + 1]
            s = 1.0 + y * y
            entries = [(k, k + 2, 1.0), (k + 1, k + 2, -factor * y * px / s)]
            if chaplygin:
                entries.append((0, k + 1, 1.0 / s))
            return _bivector(nb, entries)

        return fn

    def lambda0(b: np.ndarray) -> np.ndarray:
        entries = [(k, k + 2, 1.0)] + ([(0, k + 1, 1.0)] if chaplygin else [])
        return _bivector(nb, entries)

    def psi_red(b: np.ndarray) -> np.ndarray:
        out = np.array(b, dtype=float)
        out[k + 1] = (1 + b[k] ** 2) * b[k + 1]
        return out

    provenance_red: Provenance = "derived" if chaplygin else "literature"
    expected = {
        "pi_nh": ExpectedField("pi_nh", "display", "bivector", pi_nh, "literature"),
        "J": ExpectedField("J", "display", "values", momentum, "literature"),
        "K_W": ExpectedField("K_W", "display", "batched_two_form", curvature, "literature"),
        "jk": ExpectedField("jk", "display", "two_form", jk, "literature"),
        "nh_pairing": ExpectedField("nh_pairing", "display", "values", pairing, "literature"),
        "Psi_adapted": ExpectedField("Psi_adapted", "display", "values", psi_adapted, "literature"),
        "pi_nh_red": ExpectedField("pi_nh_red", "base", "bivector", reduced(1.0), provenance_red),
        "Lambda": ExpectedField("Lambda", "base", "bivector", reduced(2.0), provenance_red),
        "Lambda0": ExpectedField("Lambda0", "base0", "bivector", lambda0, provenance_red),
        "Psi_red": ExpectedField("Psi_red", "base", "map", psi_red, "derived"),
    }
    if chaplygin:
        expected["jk_red"] = ExpectedField(
            "jk_red", "base", "two_form", lambda b: _two_form(nb, [(0, 1, b[1] * b[2])]), "derived"
        )

    leaf = ScalarField(phase.M, lambda x: sqrt(1.0 + x[1] * x[1]) * x[3])
    casimirs: dict[str, ScalarField] = {}
    casimirs0: dict[str, ScalarField] = {}
    if not chaplygin:
        casimirs["leaf_function"] = ScalarField(base, lambda b: (1.0 + b[0] * b[0]) * b[1])
        casimirs0["p~_x"] = ScalarField(base0, lambda b: b[1])

    x0 = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
    return ExampleBundle(
        name=name,
        parameters=parameters,
        system=system,
        phase=phase,
        structure=structure,
        quotient=quotient,
        phase0=phase0,
        quotient0=quotient0,
        display=display,
        to_display=to_display,
        from_display=from_display,
        expected=expected,
        gauge_form=zero_form(phase.M, 2),
        casimirs=casimirs,
        casimirs0=casimirs0,
        monitors={"H": phase.H, "leaf_function": leaf},
        conserved=("H",),
        x0=x0,
        nh_non_casimirs=tuple(casimirs),
        chaplygin=chaplygin,
        gauge_suite=not chaplygin,
        witness_point=x0,
    )


# The vertical rolling disk


def _disk(name: ExampleName, parameters: dict[str, float]) -> ExampleBundle:
    m, R, I, J = (parameters[key] for key in ("m", "R", "I", "J"))
    Q = Chart(
        f"{name}/Q",
        ("x", "y", "phi", "psi"),
        ((-1.0, 1.0), (-1.0, 1.0), (0.0, TWO_PI), (0.0, TWO_PI)),
        periodic=(False, False, True, True),
    )
    kappa = np.diag([m, m, I, J])

    def roll(q: Point) -> Any:
        return stack([R * cos(q[3]), R * sin(q[3])])

    def frame_d(q: Point) -> Any:
        v = roll(q)
        return stack([stack([v[0], v[1], 1.0, 0.0]), np.array([0.0, 0.0, 0.0, 1.0])])

    def constraint(j: int) -> Callable[[Point], Any]:
        def fn(q: Point) -> Any:
            e = np.eye(2)[j]
            return concatenate([e, stack([-roll(q)[j], 0.0])])

        return fn

    system = MechanicalSystem(
        name=name,
        Q=Q,
        kappa=MatrixField(Q, lambda q: kappa),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=(KForm(Q, 1, constraint(0)), KForm(Q, 1, constraint(1))),
        frame_D=Frame(Q, 2, frame_d),
        frame_W=_zero_vector_fields(Q, np.eye(4)[:2]),
    )
    generators = _zero_vector_fields(Q, np.eye(4)[:3])
    phase, structure, phase0 = _assemble(
        name, parameters, system, generators, np.zeros((3, 3, 3)), (0, 1)
    )

    momenta = ("p~_phi", "p~_psi")
    display, to_display, from_display = _frame_momenta_display(phase, momenta)

    def quotient_of(target: ConstrainedPhase, suffix: str) -> QuotientChart:
        return _frame_momenta_charts(
            target,
            f"{name}/{suffix}",
            ("psi",),
            ((0.0, TWO_PI),),
            (True,),
            momenta,
            lambda q: q[3:4],
            lambda b: concatenate([np.zeros(3), b]),
        )

    quotient = quotient_of(phase, "M")
    quotient0 = quotient_of(phase0, "W0")
    c = m * R / (m * R**2 + I)

    def momentum(d: np.ndarray) -> np.ndarray:
        psi, p_phi = d[3], d[4]
        return np.array([c * np.cos(psi) * p_phi, c * np.sin(psi) * p_phi, I * p_phi / (m * R**2 + I)])

    def curvature(d: np.ndarray) -> np.ndarray:
        psi = d[3]
        dpsi_dphi = _two_form(6, [(3, 2, 1.0)])
        return np.stack([R * np.sin(psi) * dpsi_dphi, -R * np.cos(psi) * dpsi_dphi, np.zeros((6, 6))])

    def lambda_fn(b: np.ndarray) -> np.ndarray:
        return _bivector(3, [(0, 2, 1.0)])

    expected = {
        "J": ExpectedField("J", "display", "values", momentum, "derived"),
        "K_W": ExpectedField("K_W", "display", "batched_two_form", curvature, "literature"),
        "jk": ExpectedField("jk", "display", "two_form", lambda d: np.zeros((6, 6)), "literature"),
        "nh_pairing": ExpectedField(
            "nh_pairing", "display", "values", lambda d: np.array([0.0, 0.0, d[4]]), "literature"
        ),
        "Psi_adapted": ExpectedField("Psi_adapted", "display", "values", _adapted_psi(4, 2), "literature"),
        "pi_nh_red": ExpectedField("pi_nh_red", "base", "bivector", lambda_fn, "literature"),
        "Lambda": ExpectedField("Lambda", "base", "bivector", lambda_fn, "literature"),
        "Lambda0": ExpectedField("Lambda0", "base0", "bivector", lambda_fn, "literature"),
        "jk_red": ExpectedField("jk_red", "base", "two_form", lambda b: np.zeros((3, 3)), "literature"),
        "Psi_red": _identity_map(),
    }

    def p_phi(x: Point) -> Any:
        return phase.frame_momenta(x)[0]

    return ExampleBundle(
        name=name,
        parameters=parameters,
        system=system,
        phase=phase,
        structure=structure,
        quotient=quotient,
        phase0=phase0,
        quotient0=quotient0,
        display=display,
        to_display=to_display,
        from_display=from_display,
        expected=expected,
        gauge_form=zero_form(phase.M, 2),
        casimirs={"p~_phi": ScalarField(quotient.base, lambda b: b[1])},
        casimirs0={"p~_phi": ScalarField(quotient0.base, lambda b: b[1])},
        monitors={
            "H": phase.H,
            "p~_phi": ScalarField(phase.M, p_phi),
            "p_phi": ScalarField(phase.M, lambda x: p_phi(x) * (I / (m * R**2 + I))),
        },
        conserved=("H", "p~_phi", "p_phi"),
        x0=np.array([0.0, 0.0, 0.0, 0.3, 1.0, 0.5]),
    )


# The snakeboard


def _snakeboard(name: ExampleName, parameters: dict[str, float]) -> ExampleBundle:
    m, r, J, J1 = (parameters[key] for key in ("m", "r", "J", "J1"))
    if m * r**2 <= J:
        raise ExampleError(
            f"snakeboard needs m r^2 > J for a positive definite metric (m r^2 = {m * r**2}, J = {J})"
        )
    lo, hi = SNAKEBOARD_PHI_MARGIN, np.pi - SNAKEBOARD_PHI_MARGIN
    Q = Chart(
        f"{name}/Q",
        ("x", "y", "theta", "phi", "psi"),
        ((-1.0, 1.0), (-1.0, 1.0), (0.0, TWO_PI), (lo, hi), (0.0, TWO_PI)),
        periodic=(False, False, True, False, True),
    )
    kappa = np.array(
        [
            [m, 0.0, 0.0, 0.0, 0.0],
            [0.0, m, 0.0, 0.0, 0.0],
            [0.0, 0.0, m * r**2, 0.0, J],
            [0.0, 0.0, 0.0, 2 * J1, 0.0],
            [0.0, 0.0, J, 0.0, J],
        ]
    )

    def slide(q: Point) -> Any:
        cot = cos(q[3]) / sin(q[3])
        return stack([r * cos(q[2]) * cot, r * sin(q[2]) * cot])

    def frame_d(q: Point) -> Any:
        v = slide(q)
        return stack(
            [
                stack([-v[0], -v[1], 1.0, 0.0, 0.0]),
                np.array([0.0, 0.0, 0.0, 1.0, 0.0]),
                np.array([0.0, 0.0, 0.0, 0.0, 1.0]),
            ]
        )

    def constraint(j: int) -> Callable[[Point], Any]:
        def fn(q: Point) -> Any:
            return concatenate([np.eye(2)[j], stack([slide(q)[j], 0.0, 0.0])])

        return fn

    system = MechanicalSystem(
        name=name,
        Q=Q,
        kappa=MatrixField(Q, lambda q: kappa),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=(KForm(Q, 1, constraint(0)), KForm(Q, 1, constraint(1))),
        frame_D=Frame(Q, 3, frame_d),
        frame_W=_zero_vector_fields(Q, np.eye(5)[:2]),
    )
    generators = _zero_vector_fields(Q, np.eye(5)[[0, 1, 4]])
    phase, structure, phase0 = _assemble(
        name, parameters, system, generators, np.zeros((3, 3, 3)), (0, 1)
    )

    momenta = ("p~_theta", "p~_phi", "p~_psi")
    display, to_display, from_display = _frame_momenta_display(phase, momenta)

    def quotient_of(target: ConstrainedPhase, suffix: str) -> QuotientChart:
        return _frame_momenta_charts(
            target,
            f"{name}/{suffix}",
            ("theta", "phi"),
            ((0.0, TWO_PI), (lo, hi)),
            (True, False),
            momenta,
            lambda q: q[2:4],
            lambda b: concatenate([np.zeros(2), b, np.zeros(1)]),
        )

    quotient = quotient_of(phase, "M")
    quotient0 = quotient_of(phase0, "W0")

    def jk_coefficient(phi: float, p_theta: float, p_psi: float) -> float:
        s2 = np.sin(phi) ** 2
        return -(m * r**2 / np.tan(phi)) / (m * r**2 - J * s2) * (p_theta - p_psi)

    def momentum(d: np.ndarray) -> np.ndarray:
        theta, phi, p_theta, p_psi = d[2], d[3], d[5], d[7]
        s2 = np.sin(phi) ** 2
        a = s2 * (p_theta - p_psi) / (m * r**2 - J * s2)
        cot = 1.0 / np.tan(phi)
        return np.array([-m * r * np.cos(theta) * cot * a, -m * r * np.sin(theta) * cot * a, p_psi])

    def curvature(d: np.ndarray) -> np.ndarray:
        theta, phi = d[2], d[3]
        scale = r / np.sin(phi) ** 2
        dtheta_dphi = _two_form(8, [(2, 3, 1.0)])
        return np.stack(
            [scale * np.cos(theta) * dtheta_dphi, scale * np.sin(theta) * dtheta_dphi, np.zeros((8, 8))]
        )

    def lambda_fn(b: np.ndarray) -> np.ndarray:
        return _bivector(5, [(0, 2, 1.0), (1, 3, 1.0)])

    expected = {
        "J": ExpectedField("J", "display", "values", momentum, "literature"),
        "K_W": ExpectedField("K_W", "display", "batched_two_form", curvature, "literature"),
        "jk": ExpectedField(
            "jk",
            "display",
            "two_form",
            lambda d: _two_form(8, [(2, 3, jk_coefficient(d[3], d[5], d[7]))]),
            "literature",
        ),
        "nh_pairing": ExpectedField(
            "nh_pairing", "display", "values", lambda d: np.array([0.0, 0.0, d[7]]), "literature"
        ),
        "Psi_adapted": ExpectedField("Psi_adapted", "display", "values", _adapted_psi(5, 2), "derived"),
        "Lambda": ExpectedField("Lambda", "base", "bivector", lambda_fn, "literature"),
        "Lambda0": ExpectedField("Lambda0", "base0", "bivector", lambda_fn, "literature"),
        "jk_red": ExpectedField(
            "jk_red",
            "base",
            "two_form",
            lambda b: _two_form(5, [(0, 1, jk_coefficient(b[1], b[2], b[4]))]),
            "literature",
        ),
        "Psi_red": _identity_map(),
    }

    return ExampleBundle(
        name=name,
        parameters=parameters,
        system=system,
        phase=phase,
        structure=structure,
        quotient=quotient,
        phase0=phase0,
        quotient0=quotient0,
        display=display,
        to_display=to_display,
        from_display=from_display,
        expected=expected,
        gauge_form=zero_form(phase.M, 2),
        casimirs={"p~_psi": ScalarField(quotient.base, lambda b: b[4])},
        casimirs0={"p~_psi": ScalarField(quotient0.base, lambda b: b[4])},
        monitors={"H": phase.H, "p~_psi": ScalarField(phase.M, lambda x: phase.frame_momenta(x)[2])},
        conserved=("H", "p~_psi"),
        x0=np.array([0.0, 0.0, 0.2, 1.2, 0.1, 0.8, 0.3, 0.5]),
    )


# The rolling rigid body on SO(3) x R^3, Euler angles z-y-z


def _rz(t: Any) -> Any:
    c, s = cos(t), sin(t)
    return stack([stack([c, -s, 0.0]), stack([s, c, 0.0]), np.array([0.0, 0.0, 1.0])])


def _ry(t: Any) -> Any:
    c, s = cos(t), sin(t)
    return stack([stack([c, 0.0, s]), np.array([0.0, 1.0, 0.0]), stack([-s, 0.0, c])])


def attitude(q: Point) -> Any:
    """g = Rz(a) Ry(b) Rz(c)."""
    return einsum("ij,jk,kl->il", _rz(q[0]), _ry(q[1]), _rz(q[2]))


def body_rates(q: Point) -> Any:
    """L with Ω = L (ȧ, ḃ, ċ); its rows are the left Maurer-Cartan forms λ_i."""
    sb, cb, sc, cc = sin(q[1]), cos(q[1]), sin(q[2]), cos(q[2])
    return stack(
        [
            stack([-sb * cc, sc, 0.0]),
            stack([sb * sc, cc, 0.0]),
            stack([cb, 0.0, 1.0]),
        ]
    )


def left_frame(q: Point) -> Any:
    """Left-invariant fields dual to λ, as rows over (a, b, c)."""
    sb, cb, sc, cc = sin(q[1]), cos(q[1]), sin(q[2]), cos(q[2])
    return stack(
        [
            stack([-cc / sb, sc, cb * cc / sb]),
            stack([sc / sb, cc, -cb * sc / sb]),
            np.array([0.0, 0.0, 1.0]),
        ]
    )


def vertical_axis(q: Point) -> Any:
    """γ, the third row of g."""
    sb, cb, sc, cc = sin(q[1]), cos(q[1]), sin(q[2]), cos(q[2])
    return stack([-sb * cc, sb * sc, cb])


def _cross_two_form(c: Any, lam: Any) -> Any:
    """Σ_i c_i (λ×λ)_i with (λ×λ) = (λ₂∧λ₃, λ₃∧λ₁, λ₁∧λ₂), dense."""
    return einsum("i,ijk,ja,kb->ab", c, LEVI_CIVITA, lam, lam)


def _sphere_projector(b: np.ndarray) -> np.ndarray:
    """Projector onto T(S² × R³) at b = (γ, K); the (γ, K) chart carries a radial direction
    that the section never sees."""
    gamma = np.asarray(b[:3]) / np.linalg.norm(b[:3])
    P = np.eye(6)
    P[:3, :3] -= np.outer(gamma, gamma)
    return P


def _ball(name: ExampleName, parameters: dict[str, float], rank: int) -> ExampleBundle:
    m, r = parameters["m"], parameters["r"]
    inertia = np.array([parameters["I1"], parameters["I2"], parameters["I3"]])
    A = BALL_MATRICES[rank]
    lo, hi = BALL_TILT_MARGIN, np.pi - BALL_TILT_MARGIN
    Q = Chart(
        f"{name}/Q",
        ("a", "b", "c", "x1", "x2", "x3"),
        ((0.0, TWO_PI), (lo, hi), (0.0, TWO_PI), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)),
        periodic=(True, False, True, False, False, False),
    )

    def kappa(q: Point) -> Any:
        L = body_rates(q)
        top = einsum("ki,k,kj->ij", L, inertia, L)
        return concatenate(
            [
                concatenate([top, np.zeros((3, 3))], axis=1),
                np.hstack([np.zeros((3, 3)), m * np.eye(3)]),
            ],
            axis=0,
        )

    def frame_d(q: Point) -> Any:
        Ag = einsum("ij,jk->ik", A, attitude(q))
        return concatenate([left_frame(q), einsum("ji->ij", Ag) * r], axis=1)

    def constraint(j: int) -> Callable[[Point], Any]:
        def fn(q: Point) -> Any:
            row = einsum("k,kl,li->i", A[j], attitude(q), body_rates(q))
            return concatenate([row * (-r), np.eye(3)[j]])

        return fn

    def generators_fn(q: Point) -> Any:
        rotation = stack([1.0, 0.0, 0.0, -q[4], q[3], 0.0])
        return concatenate([stack([rotation]), np.eye(6)[3:]], axis=0)

    system = MechanicalSystem(
        name=name,
        Q=Q,
        kappa=MatrixField(Q, kappa),
        potential=ScalarField(Q, lambda q: 0.0),
        constraint_forms=tuple(KForm(Q, 1, constraint(j)) for j in range(3)),
        frame_D=Frame(Q, 3, frame_d),
        frame_W=_zero_vector_fields(Q, np.eye(6)[3:]),
    )
    # Rotations about the vertical axis act on x too, so [e0, e1] = e2 and [e0, e2] = -e1
    c = np.zeros((4, 4, 4))
    c[2, 0, 1], c[2, 1, 0] = 1.0, -1.0
    c[1, 0, 2], c[1, 2, 0] = -1.0, 1.0
    phase, structure, phase0 = _assemble(
        name, parameters, system, Frame(Q, 4, generators_fn), c, (1, 2, 3)
    )

    momenta = ("K1", "K2", "K3")
    display, to_display, from_display = _frame_momenta_display(phase, momenta)
    p = config.momentum_range

    def sampler(rng: np.random.Generator, count: int) -> np.ndarray:
        b = rng.uniform(lo, hi, count)
        c_angle = rng.uniform(0.0, TWO_PI, count)
        gamma = np.stack([-np.sin(b) * np.cos(c_angle), np.sin(b) * np.sin(c_angle), np.cos(b)], axis=1)
        return np.hstack([gamma, rng.uniform(-p, p, (count, 3))])

    def lift(gamma: Point) -> Any:
        return stack([0.0, arccos(gamma[2]), arctan2(gamma[1], -gamma[0]), 0.0, 0.0, 0.0])

    def quotient_of(target: ConstrainedPhase, suffix: str) -> QuotientChart:
        return _frame_momenta_charts(
            target,
            f"{name}/{suffix}",
            ("gamma1", "gamma2", "gamma3"),
            ((-1.0, 1.0),) * 3,
            (False,) * 3,
            momenta,
            vertical_axis,
            lift,
            sampler,
        )

    quotient = quotient_of(phase, "M")
    quotient0 = quotient_of(phase0, "W0")

    def constrained_block(gamma: np.ndarray) -> np.ndarray:
        """gᵀAᵀAg as a function of γ alone."""
        outer = np.outer(gamma, gamma)
        return {0: np.zeros((3, 3)), 1: outer, 2: np.eye(3) - outer, 3: np.eye(3)}[rank]

    def angular_velocity(gamma: np.ndarray, K: np.ndarray) -> np.ndarray:
        return np.linalg.solve(np.diag(inertia) + m * r**2 * constrained_block(gamma), K)

    def display_parts(d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        g = np.asarray(attitude(d[:3]))
        Ag = A @ g
        L = np.hstack([np.asarray(body_rates(d[:3])), np.zeros((3, 6))])
        Omega = np.linalg.solve(np.diag(inertia) + m * r**2 * Ag.T @ Ag, d[6:])
        return g, Ag, L, Omega

    def momentum(d: np.ndarray) -> np.ndarray:
        g, Ag, _, Omega = display_parts(d)
        gamma, x, K = g[2], d[3:6], d[6:]
        linear = m * r * Ag @ Omega
        rotation = gamma @ K - r * gamma @ Ag.T @ linear + (x[0] * linear[1] - x[1] * linear[0])
        return np.concatenate([[rotation], linear])

    def curvature(d: np.ndarray) -> np.ndarray:
        _, Ag, L, _ = display_parts(d)
        rows = [np.zeros((9, 9))] + [np.asarray(_cross_two_form(-r * Ag[j], L)) for j in range(3)]
        return np.stack(rows)

    def jk(d: np.ndarray) -> np.ndarray:
        _, Ag, L, Omega = display_parts(d)
        return np.asarray(_cross_two_form(-m * r**2 * Ag.T @ Ag @ Omega, L))

    def lie_poisson(b: np.ndarray) -> np.ndarray:
        gamma, K = b[:3], b[3:]
        mixed = -np.einsum("ijl,l->ij", LEVI_CIVITA, gamma)
        spin = -np.einsum("ijl,l->ij", LEVI_CIVITA, K)
        return np.block([[np.zeros((3, 3)), mixed], [mixed, spin]])

    def reduced_field(b: np.ndarray) -> np.ndarray:
        gamma, K = b[:3], b[3:]
        Omega = angular_velocity(gamma, K)
        return np.concatenate([np.cross(gamma, Omega), np.cross(K, Omega)])

    # Basic remainder of <J, K_W> + B on (γ, K): s m r² <γ, Ω> γ·dγ×dγ.
    # Signs follow K_W(X, Y) = -P_W([P_C X, P_C Y]) (see w_curvature); with
    # K_W = +P_W([X, Y]) both s and the rank 2 gauge below flip to -m r².
    remainder_sign = {0: 0.0, 1: -1.0, 2: 1.0, 3: 0.0}[rank]

    def remainder(b: np.ndarray) -> np.ndarray:
        gamma, K = b[:3], b[3:]
        coefficient = remainder_sign * m * r**2 * gamma @ angular_velocity(gamma, K)
        out = np.zeros((6, 6))
        out[:3, :3] = np.einsum("i,ijk->jk", coefficient * gamma, LEVI_CIVITA)
        return out

    expected = {
        "J": ExpectedField("J", "display", "values", momentum, "derived"),
        "K_W": ExpectedField("K_W", "display", "batched_two_form", curvature, "derived"),
        "jk": ExpectedField("jk", "display", "two_form", jk, "derived"),
        "nh_pairing": ExpectedField(
            "nh_pairing",
            "display",
            "values",
            lambda d: np.array([np.asarray(vertical_axis(d[:3])) @ d[6:], 0.0, 0.0, 0.0]),
            "literature",
        ),
        "Psi_adapted": ExpectedField("Psi_adapted", "display", "values", _adapted_psi(6, 3), "literature"),
        "Lambda": ExpectedField("Lambda", "base", "bivector", lie_poisson, "literature"),
        "Lambda0": ExpectedField("Lambda0", "base0", "bivector", lie_poisson, "literature"),
        "X_red": ExpectedField("X_red", "base", "vector", reduced_field, "literature"),
        "B_red": ExpectedField("B_red", "base", "two_form", remainder, "literature"),
        "Psi_red": _identity_map(),
    }
    if rank in (0, 1):
        expected["jk_red"] = ExpectedField("jk_red", "base", "two_form", remainder, "literature")

    M = phase.M
    if rank == 2:
        gauge_form = _ball_gauge(phase, A, inertia, m, r)
    elif rank == 3:
        gauge_form = -jk_two_form(structure)
    else:
        gauge_form = zero_form(M, 2)

    def k_dot_gamma(x: Point) -> Any:
        return total(phase.frame_momenta(x) * vertical_axis(x[:3]))

    def k_dot_gamma_base(b: Point) -> Any:
        return total(b[:3] * b[3:])

    return ExampleBundle(
        name=name,
        parameters=parameters,
        system=system,
        phase=phase,
        structure=structure,
        quotient=quotient,
        phase0=phase0,
        quotient0=quotient0,
        display=display,
        to_display=to_display,
        from_display=from_display,
        expected=expected,
        gauge_form=gauge_form,
        casimirs={"K.gamma": ScalarField(quotient.base, k_dot_gamma_base)},
        casimirs0={"K.gamma": ScalarField(quotient0.base, k_dot_gamma_base)},
        monitors={"H": phase.H, "K.gamma": ScalarField(M, k_dot_gamma)},
        conserved=("H", "K.gamma"),
        x0=np.array([0.1, 1.0, 0.4, 0.0, 0.0, 0.0, 0.6, -0.4, 0.9]),
        gauge_suite=rank in (2, 3),
        witness_point=np.array([0.3, 1.0, 0.7, 0.0, 0.0, 0.0, 0.5, -0.3, 0.8]) if rank == 2 else None,
        base_projector=_sphere_projector,
    )


def _ball_gauge(
    phase: ConstrainedPhase, A: np.ndarray, inertia: np.ndarray, m: float, r: float
) -> KForm:
    """B = m r² <Ω, λ×λ>, the part of -<J, K_W> that is not basic for the rank 2 body.

    Positive because K_W(X, Y) = -P_W([P_C X, P_C Y]); under the opposite curvature
    sign the same gauge reads -m r² <Ω, λ×λ>.
    """
    n = phase.q_dim

    def dense(x: Point) -> Any:
        q = x[:n]
        Ag = einsum("ij,jk->ik", A, attitude(q))
        metric = einsum("ji,jk->ik", Ag, Ag) * (m * r**2) + np.diag(inertia)
        Omega = solve(metric, phase.frame_momenta(x), point=x)
        lam = concatenate([body_rates(q), np.zeros((3, phase.M.dim - 3))], axis=1)
        return _cross_two_form(Omega * (m * r**2), lam)

    return kform_from_dense(phase.M, 2, dense)


# Entry points


def _validate_parameters(name: str, parameters: dict[str, float], known: set[str]) -> None:
    unknown = set(parameters) - known
    if unknown:
        raise ExampleError(f"unknown parameters for {name}: {', '.join(sorted(unknown))}")
    for key, v in parameters.items():
        if not v > 0:
            raise ExampleError(f"parameter {key} of {name} must be positive, got {v}")


def make_example(name: str, params: Optional[dict[str, float]] = None) -> ExampleBundle:
    if name not in example_names:
        raise ExampleError(f"unknown example '{name}' (known: {', '.join(example_names)})")
    example: ExampleName = name  # type: ignore
    known = set(config.parameters_for(example))
    parameters = {k: float(v) for k, v in config.parameters_for(example, params).items()}
    _validate_parameters(name, parameters, known)

    if example in ("particle", "particle_chaplygin"):
        return _particle(example, parameters, chaplygin=example == "particle_chaplygin")
    if example == "disk":
        return _disk(example, parameters)
    if example == "snakeboard":
        return _snakeboard(example, parameters)
    return _ball(example, parameters, rank=int(example[-1]))


def list_suites(bundle: ExampleBundle) -> list[SuiteName]:
    """Suites that apply to the bundle, in run order."""
    applicable: set[SuiteName] = {"jacobiator", "jk", "lambda", "psi", "dynamics", "twisted"}
    if bundle.casimirs:
        applicable.add("casimir")
    if bundle.chaplygin:
        applicable.add("bates_sniatycki")
    if bundle.gauge_suite:
        applicable.add("gauge")
    return [suite for suite in suite_names if suite in applicable]
