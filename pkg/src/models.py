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

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .constants import REPORT_SCHEMA

# Run options

DerivativeMode = Literal["dual", "fd"]
IntegratorMethod = Literal["rk4", "euler"]
Provenance = Literal["literature", "derived", "trivial"]
CheckKind = Literal["bound", "witness", "info"]

ExampleName = Literal[
    "particle",
    "particle_chaplygin",
    "disk",
    "snakeboard",
    "ball_rank0",
    "ball_rank1",
    "ball_rank2",
    "ball_rank3",
]

SuiteName = Literal[
    "jacobiator",
    "jk",
    "lambda",
    "psi",
    "casimir",
    "dynamics",
    "twisted",
    "bates_sniatycki",
    "gauge",
]

# Order suites are run and listed in
suite_names: list[SuiteName] = [
    "jacobiator",
    "jk",
    "lambda",
    "psi",
    "casimir",
    "dynamics",
    "twisted",
    "bates_sniatycki",
    "gauge",
]

example_names: list[ExampleName] = [
    "particle",
    "particle_chaplygin",
    "disk",
    "snakeboard",
    "ball_rank0",
    "ball_rank1",
    "ball_rank2",
    "ball_rank3",
]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(ge=1)
    seed: int
    tol: float = Field(gt=0)
    derivative_mode: DerivativeMode
    workers: int = Field(default=1, ge=1)


# Reports


class CheckResult(BaseModel):
    name: str
    kind: CheckKind = "bound"
    residual: float
    threshold: float
    passed: bool
    worst_point: Optional[list[float]] = None
    note: Optional[str] = None


class SuiteResult(BaseModel):
    name: SuiteName
    max_residual: float
    tolerance: float
    passed: bool = Field(serialization_alias="pass")
    samples: int
    seed: int
    worst_point: Optional[list[float]] = None
    checks: list[CheckResult] = []
    error: Optional[str] = None


class VerifyReport(BaseModel):
    report_schema: str = Field(default=REPORT_SCHEMA, serialization_alias="schema")
    example: ExampleName
    parameters: dict[str, float]
    derivative_mode: DerivativeMode
    samples: int
    seed: int
    tol: float
    suites: list[SuiteResult]
    passed: bool = Field(serialization_alias="pass")


class GaugeReport(BaseModel):
    max_residual: float
    worst_point: Optional[list[float]]
    min_det: float
    invertible: bool


class JacobiatorReport(BaseModel):
    """Residuals of the three Jacobiator formulas, each compared with the direct coordinate Jacobiator."""

    curvature_formula: float
    momentum_formula: float
    vertical_formula: Optional[float]
    worst_point: Optional[list[float]]
    gauge_projection: float


class PsiReport(BaseModel):
    diffeomorphism_min_det: float
    constraint_distribution: float
    two_form_on_c: float
    bivector_push: float
    adapted_coordinates: float
    momentum_pairing: float
    hamiltonian_pairing: float


class BatesSniatyckiReport(BaseModel):
    residual: float
    closedness: float
    worst_point: Optional[list[float]]


class ReducedDynamicsReport(BaseModel):
    basic_contraction: float
    basic_lie: float
    is_basic: bool
    gauge_residual: Optional[float] = None
    twisted_residual: Optional[float] = None
    twisted_closedness: Optional[float] = None
    conserved: Optional[float] = None
    dynamical: Optional[float] = None
