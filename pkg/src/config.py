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

import json
import os
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from functools import cache
from typing import Any, Optional

from dotenv import load_dotenv

from .constants import ENV_PREFIX
from .logger import logger
from .models import DerivativeMode, RunConfig
from .utils import load_file, none_defaulting


class Config:
    """Fancy config class: config.json defaults, NONHOLO_* environment overrides, then runtime overrides."""

    samples: int
    seed: int
    tol: float
    derivative_mode: DerivativeMode
    fd_step: float
    check_samples: int
    momentum_range: float
    workers: int
    debug: bool

    # Dynamics
    dynamics_dt: float
    dynamics_t_end: float

    # Default physical parameters, per example
    parameters: dict[str, dict[str, float]]

    def __getattr__(self, key: str) -> Any:
        overrides = _overrides.get()
        if key in overrides:
            return overrides[key]

        defaults = _defaults()
        if key not in defaults:
            raise AttributeError(f"Error: unknown config key {key}")

        env_value = os.getenv(f"{ENV_PREFIX}{key.upper()}")
        if env_value is not None:
            return _coerce(key, env_value, defaults[key])
        return defaults[key]

    def __setattr__(self, name: str, value: object) -> None:
        if name not in _defaults():
            raise AttributeError(f"Error: unknown config key {name}")
        _overrides.set({**_overrides.get(), name: value})

    @contextmanager
    def override(self, **values: Any) -> Iterator["Config"]:
        unknown = set(values) - set(_defaults())
        if unknown:
            raise AttributeError(f"Error: unknown config keys {sorted(unknown)}")
        token = _overrides.set({**_overrides.get(), **values})
        try:
            yield self
        finally:
            _overrides.reset(token)

    def restore_defaults(self) -> None:
        _overrides.set({})

    def snapshot(self) -> dict[str, Any]:
        """Runtime overrides in effect, for handing to worker processes."""
        return dict(_overrides.get())

    def parameters_for(
        self, example: str, given: Optional[dict[str, float]] = None
    ) -> dict[str, float]:
        defaults = dict(none_defaulting(self.parameters, example, {}))
        defaults.update(given or {})
        return defaults

    def run_config(self) -> RunConfig:
        return RunConfig(
            samples=self.samples,
            seed=self.seed,
            tol=self.tol,
            derivative_mode=self.derivative_mode,
            workers=self.workers,
        )


# Per context, so worker threads inherit the CLI overrides but not each other's
_overrides: ContextVar[dict[str, Any]] = ContextVar("nonholo_config_overrides", default={})


@cache
def _defaults() -> dict[str, Any]:
    return json.loads(load_file("config.json"))  # type: ignore


def _coerce(key: str, raw: str, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, (dict, list)):
            return json.loads(raw)
    except ValueError:
        logger.error(
            f"Error: could not parse {ENV_PREFIX}{key.upper()}={raw!r}, using default"
        )
        return default
    return raw


def load_environment() -> None:
    """Pull NONHOLO_* overrides from a .env file, without clobbering the real environment."""
    load_dotenv(override=False)


config = Config()
