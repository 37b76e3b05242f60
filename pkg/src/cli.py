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

import csv
import io
import sys
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import Any, NoReturn, Optional

import click
import numpy as np
import orjson
from pydantic import ValidationError

from .config import config, load_environment
from .constants import EXIT_FAILED, EXIT_USAGE
from .dual import value
from .dynamics import integrate
from .errors import NonholoError, SuiteError
from .examples import ExampleBundle, list_suites, make_example
from .logger import logger, setup_logger
from .mechanics import nh_hamel_field
from .models import IntegratorMethod, RunConfig, SuiteName, SuiteResult, VerifyReport, example_names, suite_names
from .tasks import run_plans_blocking
from .utils import format_float, get_version

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS


def _usage_error(message: str) -> NoReturn:
    click.echo(message if message.startswith("Error:") else f"Error: {message}", err=True)
    sys.exit(EXIT_USAGE)


@contextmanager
def _usage_errors() -> Iterator[None]:
    """Errors while resolving the request exit with the usage code."""
    try:
        yield
    except (NonholoError, ValidationError) as e:
        _usage_error(str(e))


def parse_params(raw: Sequence[str]) -> dict[str, float]:
    params: dict[str, float] = {}
    for item in raw:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise NonholoError(f"parameters are given as key=value, got '{item}'")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise NonholoError(f"parameter {key} is not a number: '{val}'") from None
    return params


def parse_suites(raw: Optional[str], bundle: ExampleBundle) -> list[SuiteName]:
    if not raw:
        return list_suites(bundle)
    names = [name.strip() for name in raw.split(",") if name.strip()]
    for name in names:
        if name not in suite_names:
            raise SuiteError(f"unknown suite '{name}' (known: {', '.join(suite_names)})")
    return names  # type: ignore


def parse_vector(raw: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in raw.split(",")])
    except ValueError:
        raise NonholoError(f"could not parse coordinates '{raw}'") from None


def dump_json(data: Any) -> bytes:
    return orjson.dumps(data, option=JSON_OPTIONS)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


def _overrides(**values: Any) -> dict[str, Any]:
    return {key: v for key, v in values.items() if v is not None}


@click.group()
@click.version_option(get_version(), prog_name="nonholo")
@click.option("--debug", is_flag=True, default=None, help="Verbose logging (and a log file).")
def cli(debug: Optional[bool]) -> None:
    """Numerical verification of nonholonomic brackets, gauges and reductions."""
    load_environment()
    if debug is not None:
        config.debug = debug
    setup_logger(config.debug)


@cli.command()
@click.argument("example")
@click.option("--suites", "suites_raw", default=None, help="Comma-separated suite names.")
@click.option("--samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--derivative-mode", type=click.Choice(["dual", "fd"]), default=None)
@click.option("--fd-step", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--param", "params_raw", multiple=True, help="Physical parameter, key=value.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def verify(
    example: str,
    suites_raw: Optional[str],
    samples: Optional[int],
    seed: Optional[int],
    tol: Optional[float],
    derivative_mode: Optional[str],
    fd_step: Optional[float],
    workers: Optional[int],
    params_raw: tuple[str, ...],
    out: Optional[str],
) -> None:
    """Run verification suites on EXAMPLE (or 'all') and print a JSON report."""
    overrides = _overrides(
        samples=samples,
        seed=seed,
        tol=tol,
        derivative_mode=derivative_mode,
        fd_step=fd_step,
        workers=workers,
    )
    with config.override(**overrides):
        with _usage_errors():
            run = config.run_config()
            params = parse_params(params_raw)
            names = list(example_names) if example == "all" else [example]
            plans = []
            for name in names:
                bundle = make_example(name, params or None)
                plans.append((bundle, parse_suites(suites_raw, bundle)))

        results = run_plans_blocking(plans, run)
        reports = [
            _verify_report(bundle, suite_results, run)
            for (bundle, _), suite_results in zip(plans, results)
        ]

    data = [r.model_dump(by_alias=True) for r in reports]
    _emit(dump_json(data if example == "all" else data[0]).decode() + "\n", out)
    if not all(r.passed for r in reports):
        sys.exit(EXIT_FAILED)


def _verify_report(
    bundle: ExampleBundle, results: list[SuiteResult], run: RunConfig
) -> VerifyReport:
    report = VerifyReport(
        example=bundle.name,
        parameters=bundle.parameters,
        derivative_mode=run.derivative_mode,
        samples=run.samples,
        seed=run.seed,
        tol=run.tol,
        suites=results,
        passed=all(r.passed for r in results),
    )
    logger.info(f"{bundle.name}: {'pass' if report.passed else 'FAIL'} ({len(results)} suites)")
    return report


def trajectory_csv(bundle: ExampleBundle, times: np.ndarray, states: np.ndarray, monitors: dict[str, np.ndarray]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    names = list(monitors)
    writer.writerow(["t", *bundle.display.coord_names, *names])
    for i, (t, state) in enumerate(zip(times, states)):
        shown = np.asarray(value(bundle.to_display(state)), dtype=float)
        row = [t, *shown, *(monitors[name][i] for name in names)]
        writer.writerow([format_float(v) for v in row])
    return buffer.getvalue()


@cli.command()
@click.argument("example")
@click.option("--x0", "x0_raw", default=None, help="Initial point in display coordinates, comma-separated.")
@click.option("--t-end", type=float, default=None)
@click.option("--dt", type=float, default=None)
@click.option("--method", type=click.Choice(["rk4", "euler"]), default="rk4")
@click.option("--param", "params_raw", multiple=True, help="Physical parameter, key=value.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def simulate(
    example: str,
    x0_raw: Optional[str],
    t_end: Optional[float],
    dt: Optional[float],
    method: IntegratorMethod,
    params_raw: tuple[str, ...],
    out: Optional[str],
) -> None:
    """Integrate the nonholonomic vector field of EXAMPLE and print a CSV trajectory."""
    with _usage_errors():
        bundle = make_example(example, parse_params(params_raw) or None)
        x0 = bundle.x0 if x0_raw is None else parse_vector(x0_raw)
        if x0.shape != (bundle.display.dim,):
            raise NonholoError(
                f"x0 has {x0.size} coordinates, {example} needs {bundle.display.dim} ({', '.join(bundle.display.coord_names)})"
            )
        start = np.asarray(value(bundle.from_display(x0)), dtype=float)

    traj = integrate(
        nh_hamel_field(bundle.phase),
        start,
        t_end if t_end is not None else config.dynamics_t_end,
        dt if dt is not None else config.dynamics_dt,
        method,
        monitors=bundle.monitors,
    )
    _emit(trajectory_csv(bundle, traj.times, traj.states, traj.monitors), out)
    if traj.error:
        click.echo(traj.error, err=True)
        sys.exit(EXIT_FAILED)


@cli.command(name="list")
def list_command() -> None:
    """List examples and the suites that apply to each."""
    for name in example_names:
        suites = list_suites(make_example(name))
        click.echo(f"{name}: {', '.join(suites)}")
