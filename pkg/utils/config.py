# ==================== config.py ====================
"""
Runtime settings for solgeo
Defaults, SOL_* environment variables and flat key=value config files
"""

import os
import logging
from contextlib import contextmanager
from functools import lru_cache
from typing import Any, Dict, Iterator, Mapping, Optional

from dotenv import load_dotenv, dotenv_values
from pydantic import BaseModel, Field, field_validator

load_dotenv()

ENV_PREFIX = "SOL_"


class Settings(BaseModel):
    """
    Every numeric knob of the toolkit in one validated model

    Precedence when loading: explicit overrides > config file >
    SOL_* environment variables > the defaults below.
    """

    # integrators
    dt: float = Field(default=1e-3, description="RK4 step for flowlines and wavefronts")
    exp_dt: float = Field(default=1e-2, description="Initial step of the exp_map halving loop")
    exp_tol: float = Field(default=1e-9, description="Halving self-consistency target")
    exp_max_halvings: int = Field(default=6, ge=0)
    mesh_dt: float = Field(default=5e-3, description="Pushforward step for sphere meshes")
    max_steps: int = Field(default=10_000_000, gt=0)

    # classification and cut locus
    tol_perfect: float = 1e-9
    spine_tol: float = 1e-8
    plane_tol: float = 1e-9
    spline_points: int = Field(default=2048, ge=16)

    # shooting
    newton_max_iter: int = Field(default=40, gt=0)
    newton_tol: float = 1e-10
    continuation_steps: int = Field(default=16, gt=0)
    log_seed_grid: int = Field(default=48, ge=4, description="Azimuth samples of the log_map seed table")

    # output
    seed: int = 0
    digits: int = Field(default=9, ge=1, le=17)
    full_digits: int = Field(default=17, ge=1, le=17)
    default_resolution: int = Field(default=128, ge=8)
    log_level: str = "WARNING"

    @field_validator(
        "dt", "exp_dt", "exp_tol", "mesh_dt", "tol_perfect",
        "spine_tol", "plane_tol", "newton_tol",
    )
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level {value!r}")
        return level


def _from_environment() -> Dict[str, str]:
    """Collect SOL_* variables whose suffix names a settings field"""
    fields = Settings.model_fields
    found = {}
    for key, value in os.environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in fields:
            found[name] = value
    return found


def _from_file(path: str) -> Dict[str, str]:
    """Read a flat key=value file; keys may use dashes or underscores"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {
        key.strip().lower().replace("-", "_"): value
        for key, value in values.items()
        if value is not None
    }


def load_settings(
    config_file: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Settings:
    """
    Build a Settings instance from all layers

    Args:
        config_file: optional flat key=value file
        overrides: values that win over everything else (CLI flags);
            entries set to None are ignored

    Returns:
        Validated Settings
    """
    merged: Dict[str, Any] = {}
    merged.update(_from_environment())
    if config_file:
        file_values = _from_file(config_file)
        unknown = set(file_values) - set(Settings.model_fields)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(file_values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**merged)


_active: Optional[Settings] = None


@lru_cache(maxsize=1)
def _environment_settings() -> Settings:
    return load_settings()


def get_settings() -> Settings:
    """Process-wide settings: the installed instance, else environment and defaults"""
    return _active if _active is not None else _environment_settings()


def use_settings(settings: Optional[Settings]) -> None:
    """Install settings for the whole process; None restores the environment defaults"""
    global _active
    _active = settings


@contextmanager
def override_settings(**values: Any) -> Iterator[Settings]:
    """Temporarily run with some fields replaced"""
    previous = _active
    use_settings(Settings(**{**get_settings().model_dump(), **values}))
    try:
        yield get_settings()
    finally:
        use_settings(previous)
