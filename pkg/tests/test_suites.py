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

import numpy as np
import pytest

from src.config import config
from src.errors import SuiteError
from src.examples import make_example
from src.models import RunConfig
from src.suites import failed_suite, run_suite
from src.tasks import SuiteJob, plan_jobs, run_job, run_plans, run_suites

RUN = RunConfig(samples=3, seed=5, tol=1e-7, derivative_mode="dual", workers=2)


@pytest.fixture(scope="module")
def particle():
    return make_example("particle")


def check_named(result, name):
    matches = [c for c in result.checks if c.name == name]
    assert matches, f"no check {name} in {[c.name for c in result.checks]}"
    return matches[0]


@pytest.mark.parametrize("suite", ["jacobiator", "jk", "lambda", "psi", "casimir", "twisted", "gauge"])
def test_particle_suites_pass(particle, suite):
    result = run_suite(particle, suite, RUN)
    failing = [c.name for c in result.checks if not c.passed]
    assert result.passed, failing
    assert result.samples == 3
    assert result.seed == 5


def test_particle_closed_forms_are_checked(particle):
    result = run_suite(particle, "lambda", RUN)
    check = check_named(result, "expected_Lambda")
    assert check.residual < 1e-8
    assert check.note == "provenance: literature"


def test_particle_witnesses(particle):
    result = run_suite(particle, "gauge", RUN)
    assert check_named(result, "jk_not_dynamical").kind == "witness"
    assert check_named(result, "djk_on_S").passed


def test_particle_dynamics(particle):
    with config.override(dynamics_t_end=0.5):
        result = run_suite(particle, "dynamics", RUN)
    assert result.passed, [c.name for c in result.checks if not c.passed]
    assert check_named(result, "drift_leaf_function").kind == "witness"
    order = check_named(result, "rk4_order")
    assert order.kind == "witness"
    assert order.passed and np.isfinite(order.residual)


def test_chaplygin_particle_bates_sniatycki():
    result = run_suite(make_example("particle_chaplygin"), "bates_sniatycki", RUN)
    assert result.passed


def test_disk_casimir_suite():
    result = run_suite(make_example("disk"), "casimir", RUN)
    assert result.passed
    assert not [c for c in result.checks if c.name.startswith("not_casimir_nh_")]


def test_particle_leaf_function_is_not_a_casimir_of_the_plain_bracket(particle):
    result = run_suite(particle, "casimir", RUN)
    assert check_named(result, "casimir_leaf_function").residual < 1e-9
    moved = check_named(result, "not_casimir_nh_leaf_function")
    assert moved.kind == "witness"
    assert moved.passed
    assert moved.residual > 1e-3


def test_ball_rank2_twisted_suite_takes_the_basic_branch():
    result = run_suite(make_example("ball_rank2"), "twisted", RUN.model_copy(update={"samples": 2}))
    assert check_named(result, "reduced_gauge").kind == "bound"
    assert check_named(result, "twisted_poisson").passed
    assert check_named(result, "reduced_jacobiator").passed


def test_results_are_deterministic(particle):
    first = run_suite(particle, "jk", RUN)
    second = run_suite(particle, "jk", RUN)
    assert first.model_dump() == second.model_dump()


def test_tolerance_scales_bounds(particle):
    loose = run_suite(particle, "jk", RUN.model_copy(update={"tol": 1e-5}))
    tight = run_suite(particle, "jk", RUN)
    assert check_named(loose, "jk_invariance").threshold == pytest.approx(
        100 * check_named(tight, "jk_invariance").threshold
    )


def test_unknown_suite(particle):
    with pytest.raises(SuiteError, match="unknown suite"):
        run_suite(particle, "nosuch", RUN)


def test_failed_suite_keeps_the_message():
    result = failed_suite("lambda", RUN, ValueError("boom"))
    assert not result.passed
    assert result.error == "Error: boom"
    assert np.isinf(result.max_residual)
    assert result.model_dump(by_alias=True)["pass"] is False


@pytest.mark.asyncio
async def test_run_suites_keeps_order_and_converts_errors(particle, monkeypatch):
    def fake_run_suite(bundle, name, run):
        if name == "psi":
            raise RuntimeError("Error: psi exploded")
        return failed_suite(name, run, RuntimeError("placeholder")).model_copy(
            update={"passed": True, "error": None}
        )

    monkeypatch.setattr("src.tasks.run_suite", fake_run_suite)
    results = await run_suites(particle, ["jk", "psi", "lambda"], RUN)
    assert [r.name for r in results] == ["jk", "psi", "lambda"]
    assert [r.passed for r in results] == [True, False, True]
    assert results[1].error == "Error: psi exploded"


def test_plan_jobs_flatten_in_order(particle):
    disk = make_example("disk")
    jobs = plan_jobs([(particle, ["jk", "psi"]), (disk, ["lambda"])], RUN, {"check_samples": 2})
    assert [(j.example, j.suite) for j in jobs] == [("particle", "jk"), ("particle", "psi"), ("disk", "lambda")]
    assert jobs[2].parameters == tuple(sorted(disk.parameters.items()))
    assert all(j.settings == (("check_samples", 2),) for j in jobs)


def test_plan_jobs_take_the_active_overrides(particle):
    with config.override(seed=11):
        (job,) = plan_jobs([(particle, ["jk"])], RUN)
    assert ("seed", 11) in job.settings


def test_run_job_matches_an_in_process_run(particle):
    job = SuiteJob("particle", tuple(sorted(particle.parameters.items())), "jk", RUN)
    remote = run_job(job)
    local = run_suite(particle, "jk", RUN)
    assert remote.passed == local.passed
    assert remote.max_residual == pytest.approx(local.max_residual, rel=1e-9, abs=1e-15)
    assert [c.name for c in remote.checks] == [c.name for c in local.checks]


def test_run_job_returns_errors_as_failed_results():
    result = run_job(SuiteJob("nosuch", (), "jk", RUN))
    assert not result.passed
    assert result.error.startswith("Error:")
    assert "nosuch" in result.error


@pytest.mark.asyncio
async def test_run_plans_on_worker_processes_keeps_grouping(particle):
    disk = make_example("disk")
    grouped = await run_plans([(particle, ["jk", "lambda"]), (disk, ["jk"])], RUN)
    assert [[r.name for r in group] for group in grouped] == [["jk", "lambda"], ["jk"]]
    assert all(r.error is None for group in grouped for r in group)


@pytest.mark.asyncio
async def test_run_plans_in_process_with_one_worker(particle):
    single = RUN.model_copy(update={"workers": 1})
    (group,) = await run_plans([(particle, ["lambda"])], single)
    assert [r.name for r in group] == ["lambda"]
    assert group[0].passed
