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

import asyncio
import traceback
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from multiprocessing import get_context
from typing import Any, Optional

from attrs import frozen

from .config import config
from .examples import ExampleBundle, make_example
from .logger import logger
from .models import RunConfig, SuiteName, SuiteResult
from .suites import failed_suite, run_suite

Settings = tuple[tuple[str, Any], ...]


def _log_failure(name: SuiteName, example: str, error: BaseException) -> None:
    logger.error(
        f"Error running suite {name} on {example}: {error}, {''.join(traceback.format_exception(type(error), error, error.__traceback__))}"
    )


async def _run_one(
    bundle: ExampleBundle, name: SuiteName, run: RunConfig, semaphore: asyncio.Semaphore
) -> SuiteResult:
    async with semaphore:
        return await asyncio.to_thread(run_suite, bundle, name, run)


async def run_suites(
    bundle: ExampleBundle, names: Sequence[SuiteName], run: RunConfig
) -> list[SuiteResult]:
    """Run suites in a pool of ``run.workers`` threads; results keep the order of ``names``.

    A suite that raises becomes a failed result carrying the message.
    """
    semaphore = asyncio.Semaphore(run.workers)
    tasks = [_run_one(bundle, name, run, semaphore) for name in names]
    results = await asyncio.gather(*tasks, return_exceptions=True)

    suites: list[SuiteResult] = []
    for name, result in zip(names, results):
        if isinstance(result, BaseException):
            _log_failure(name, bundle.name, result)
            suites.append(failed_suite(name, run, result))
        else:
            suites.append(result)
    return suites


def run_suites_blocking(
    bundle: ExampleBundle, names: Sequence[SuiteName], run: RunConfig
) -> list[SuiteResult]:
    return asyncio.run(run_suites(bundle, names, run))


# Process pool. Bundles hold closures, so workers rebuild them from the example name.


@frozen
class SuiteJob:
    example: str
    parameters: tuple[tuple[str, float], ...]
    suite: SuiteName
    run: RunConfig
    settings: Settings = ()


@lru_cache(maxsize=8)
def _worker_bundle(example: str, parameters: tuple[tuple[str, float], ...], settings: Settings) -> ExampleBundle:
    # settings only key the cache; the caller has already applied them
    return make_example(example, dict(parameters))


def run_job(job: SuiteJob) -> SuiteResult:
    """Worker entry point. Errors come back as failed results, never as exceptions."""
    try:
        with config.override(**dict(job.settings)):
            bundle = _worker_bundle(job.example, job.parameters, job.settings)
            return run_suite(bundle, job.suite, job.run)
    except Exception as e:
        _log_failure(job.suite, job.example, e)
        return failed_suite(job.suite, job.run, e)


def plan_jobs(
    plans: Sequence[tuple[ExampleBundle, Sequence[SuiteName]]],
    run: RunConfig,
    settings: Optional[dict[str, Any]] = None,
) -> list[SuiteJob]:
    frozen_settings = tuple(sorted((settings if settings is not None else config.snapshot()).items()))
    return [
        SuiteJob(
            example=bundle.name,
            parameters=tuple(sorted(bundle.parameters.items())),
            suite=name,
            run=run,
            settings=frozen_settings,
        )
        for bundle, names in plans
        for name in names
    ]


async def run_plans(
    plans: Sequence[tuple[ExampleBundle, Sequence[SuiteName]]], run: RunConfig
) -> list[list[SuiteResult]]:
    """Run every (example, suite) pair; one result list per plan, in order.

    With ``run.workers`` above one the pairs share a pool of worker processes,
    otherwise each plan runs in this process.
    """
    if run.workers == 1:
        return [await run_suites(bundle, names, run) for bundle, names in plans]

    jobs = plan_jobs(plans, run)
    if not jobs:
        return [[] for _ in plans]
    loop = asyncio.get_running_loop()
    workers = min(run.workers, len(jobs))
    logger.info(f"Running {len(jobs)} suites on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
        futures = [loop.run_in_executor(pool, run_job, job) for job in jobs]
        results = await asyncio.gather(*futures, return_exceptions=True)

    flat: list[SuiteResult] = []
    for job, result in zip(jobs, results):
        if isinstance(result, BaseException):
            _log_failure(job.suite, job.example, result)
            flat.append(failed_suite(job.suite, job.run, result))
        else:
            flat.append(result)

    grouped: list[list[SuiteResult]] = []
    start = 0
    for _, names in plans:
        grouped.append(flat[start : start + len(names)])
        start += len(names)
    return grouped


def run_plans_blocking(
    plans: Sequence[tuple[ExampleBundle, Sequence[SuiteName]]], run: RunConfig
) -> list[list[SuiteResult]]:
    return asyncio.run(run_plans(plans, run))
