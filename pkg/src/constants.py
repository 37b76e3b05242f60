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

from . import env

PROJECT_NAME = "nonholo"
REPORT_SCHEMA = "nonholo-report/1"
ENV_PREFIX = "NONHOLO_"

# Pointwise linear algebra
DET_THRESHOLD = 1e-10
PIVOT_THRESHOLD = 1e-10
RANK_RTOL = 1e-8
FRAME_CONDITION_LIMIT = 1e8
METRIC_EIGEN_FLOOR = 1e-10

# Residual bounds
REFERENCE_TOL = 1e-7
ORACLE_TOL = 1e-9
FIELD_TOL = 1e-8
ZERO_TOL = 1e-10
SECTION_TOL = 1e-8
INVARIANCE_TOL = 1e-8
DERIVATIVE_AGREEMENT_TOL = 1e-4
WITNESS_FLOOR = 1e-3
TWISTED_TOL = 1e-6
ENERGY_DRIFT_TOL = 1e-8
MONITOR_DRIFT_TOL = 1e-7

# Section perturbation used for base-point independence checks
SECTION_FLOW_TIME = 0.5
SECTION_FLOW_STEPS = 200

# Dynamics
ORDER_CHECK_DT = 0.05
ORDER_CHECK_T_END = 5.0
RK4_MIN_ORDER_RATIO = 8.0
# Final-state agreement treated as exact (relative to the state size)
ROUNDOFF = 1e-12

# Per-point values kept for each memoized field
MEMO_SIZE = 2048

CSV_FLOAT_FORMAT = ".17g"
EXIT_FAILED = 1
EXIT_USAGE = 2


def get_log_file_name() -> str:
    return f"{PROJECT_NAME}.log" if env.environment == "PROD" else f"{PROJECT_NAME}-dev.log"
