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

import pytest

from src.config import config
from src.models import RunConfig


def test_defaults_come_from_config_json():
    assert config.seed == 42
    assert config.derivative_mode == "dual"
    assert config.parameters_for("disk") == {"m": 1.0, "R": 1.0, "I": 2.0, "J": 1.0}


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("NONHOLO_SEED", "9")
    monkeypatch.setenv("NONHOLO_TOL", "1e-5")
    monkeypatch.setenv("NONHOLO_DEBUG", "yes")
    assert config.seed == 9
    assert config.tol == 1e-5
    assert config.debug is True


def test_unparseable_environment_value_falls_back(monkeypatch):
    monkeypatch.setenv("NONHOLO_SAMPLES", "lots")
    assert config.samples == 200


def test_override_is_scoped():
    with config.override(samples=5, derivative_mode="fd"):
        assert config.samples == 5
        assert config.derivative_mode == "fd"
        with config.override(samples=6):
            assert config.samples == 6
        assert config.samples == 5
    assert config.samples == 200


def test_runtime_overrides_beat_the_environment(monkeypatch):
    monkeypatch.setenv("NONHOLO_SEED", "9")
    with config.override(seed=11):
        assert config.seed == 11


def test_unknown_keys():
    with pytest.raises(AttributeError):
        config.nonsense  # noqa: B018
    with pytest.raises(AttributeError):
        with config.override(nonsense=1):
            pass
    with pytest.raises(AttributeError):
        config.nonsense = 1


def test_parameters_for_merges_given_values():
    assert config.parameters_for("disk", {"m": 2.0})["m"] == 2.0
    assert config.parameters_for("particle") == {}


def test_run_config():
    with config.override(samples=7, workers=3):
        run = config.run_config()
    assert isinstance(run, RunConfig)
    assert run.samples == 7
    assert run.workers == 3
