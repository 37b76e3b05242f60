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
import zlib
from collections.abc import Mapping
from typing import Any, TypeVar, cast

import numpy as np

from .constants import CSV_FLOAT_FORMAT
from .env import environment


def get_file_path(file: str) -> str:
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(root, file)


def load_file(file: str) -> str:
    file_path = get_file_path(file)

    with open(file_path, encoding="utf-8") as f:
        content = f.read()

    return content


def is_production() -> bool:
    return environment == "PROD"


def get_version() -> str:
    manifest = load_file("manifest.json")
    return json.loads(manifest)["version"]  # type: ignore


def make_rng(seed: int, stream: str = "") -> np.random.Generator:
    """PCG64 generator keyed by (seed, stream) so suites never share a random stream."""
    key = zlib.crc32(stream.encode("utf-8")) if stream else 0
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, key])))


def format_float(x: float) -> str:
    return format(float(x), CSV_FLOAT_FORMAT)


def as_float_list(x: Any) -> list[float]:
    return [float(v) for v in np.ravel(np.asarray(x, dtype=float))]


T = TypeVar("T")


def none_defaulting(d: Mapping[str, Any], k: str, fallback: T) -> T:
    return cast("T", d[k]) if d.get(k) is not None else fallback
