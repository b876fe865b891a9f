"""Experiment configuration: one YAML file, strict validation, flag overrides.

The file has three levels: top-level scalars (``master_seed``, ``output``),
a ``system`` section (level energies and coupling entries) and a ``run``
section (horizon, grid, penalty, optimizer settings, ensemble sizes).
Unknown keys are rejected so typos fail loudly instead of silently running
the default experiment.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import yaml

from .dynamics import LambdaSystem
from .optimize import OptimizerConfig

__all__ = [
    "ConfigError",
    "SystemConfig",
    "RunConfig",
    "ExperimentConfig",
    "load_config",
]

DEFAULT_C0_LIST = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_ALPHA_LIST = (1e-3, 2e-3, 4e-3, 8e-3)


class ConfigError(ValueError):
    """Configuration file or override could not be used."""


@dataclass(frozen=True)
class SystemConfig:
    energies: tuple = (0.0, 1.0, 2.5)
    v13: float = 1.0
    v23: float = 1.7
    observable: tuple | None = None


@dataclass(frozen=True)
class RunConfig:
    total_time: float = 10.0
    segments: int = 200
    lambda_penalty: float = 5.0
    optimizer: str = "grape"
    step: float = 0.1
    max_iterations: int = 1000
    objective_tolerance: float = 0.1
    gradient_tolerance: float = 1e-6
    c0: float = 1.0
    c0_list: tuple = DEFAULT_C0_LIST
    runs: int = 100
    alpha_list: tuple = DEFAULT_ALPHA_LIST


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 1234567
    output: str | None = None
    system: SystemConfig = field(default_factory=SystemConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def build_system(self, v12: float = 0.0) -> LambdaSystem:
        """Build (and re-validate) the lambda system this config describes.

        A nonzero ``v12`` deliberately breaks the lambda structure for
        negative-control checks and therefore skips validation.
        """
        kwargs = dict(
            energies=self.system.energies,
            v13=self.system.v13,
            v23=self.system.v23,
            v12=v12,
            validate=(v12 == 0.0),
        )
        if self.system.observable is not None:
            kwargs["raw_observable"] = self.system.observable
        else:
            kwargs["penalty"] = self.run.lambda_penalty
        try:
            return LambdaSystem.create(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"invalid system parameters: {exc}") from exc

    def optimizer_config(self, method: str | None = None) -> OptimizerConfig:
        try:
            return OptimizerConfig(
                method=method or self.run.optimizer,
                step=self.run.step,
                max_iterations=self.run.max_iterations,
                objective_tolerance=self.run.objective_tolerance,
                gradient_tolerance=self.run.gradient_tolerance,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid optimizer settings: {exc}") from exc

    def check_run_values(self) -> None:
        """Validate the run-section values that the recipes consume directly."""
        run = self.run
        if run.total_time <= 0.0:
            raise ConfigError("run.total_time must be positive")
        if run.segments < 1:
            raise ConfigError("run.segments must be at least 1")
        if run.runs < 1:
            raise ConfigError("run.runs must be at least 1")
        if run.c0 <= 0.0:
            raise ConfigError("run.c0 must be positive")
        if any(c0 <= 0.0 for c0 in run.c0_list):
            raise ConfigError("run.c0_list entries must be positive")
        if any(alpha <= 0.0 for alpha in run.alpha_list):
            raise ConfigError("run.alpha_list entries must be positive")
        self.optimizer_config()


# YAML key -> (dataclass field, coercion). "lambda" is a Python keyword, so
# the run section maps it onto lambda_penalty.


def _coerce_float(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _coerce_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _coerce_str(name, value):
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string, got {value!r}")
    return value


def _coerce_float_list(name, value):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list of numbers, got {value!r}")
    return tuple(_coerce_float(f"{name}[{i}]", v) for i, v in enumerate(value))


def _coerce_triple(name, value):
    triple = _coerce_float_list(name, value)
    if len(triple) != 3:
        raise ConfigError(f"{name} must have exactly three entries")
    return triple


_SYSTEM_KEYS = {
    "energies": ("energies", _coerce_triple),
    "v13": ("v13", _coerce_float),
    "v23": ("v23", _coerce_float),
    "observable": ("observable", _coerce_triple),
}

_RUN_KEYS = {
    "total_time": ("total_time", _coerce_float),
    "segments": ("segments", _coerce_int),
    "lambda": ("lambda_penalty", _coerce_float),
    "optimizer": ("optimizer", _coerce_str),
    "step": ("step", _coerce_float),
    "max_iterations": ("max_iterations", _coerce_int),
    "objective_tolerance": ("objective_tolerance", _coerce_float),
    "gradient_tolerance": ("gradient_tolerance", _coerce_float),
    "c0": ("c0", _coerce_float),
    "c0_list": ("c0_list", _coerce_float_list),
    "runs": ("runs", _coerce_int),
    "alpha_list": ("alpha_list", _coerce_float_list),
}


def _parse_section(name, mapping, key_table, factory):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    kwargs = {}
    for key, value in mapping.items():
        if key not in key_table:
            raise ConfigError(f"unknown key '{key}' in section '{name}'")
        field_name, coerce = key_table[key]
        kwargs[field_name] = coerce(f"{name}.{key}", value)
    return factory(**kwargs)


def load_config(path: str | None) -> ExperimentConfig:
    """Load a YAML experiment config; ``None`` gives the built-in defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"invalid YAML in {path}{where}: {exc}") from exc
    if raw is None:
        return ExperimentConfig()
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    config = ExperimentConfig()
    for key, value in raw.items():
        if key == "master_seed":
            config = replace(config, master_seed=_coerce_int("master_seed", value))
        elif key == "output":
            config = replace(config, output=_coerce_str("output", value))
        elif key == "system":
            config = replace(
                config, system=_parse_section("system", value, _SYSTEM_KEYS, SystemConfig)
            )
        elif key == "run":
            config = replace(config, run=_parse_section("run", value, _RUN_KEYS, RunConfig))
        else:
            raise ConfigError(f"unknown top-level key '{key}'")
    return config
