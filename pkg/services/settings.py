from __future__ import annotations

import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

load_dotenv()


class Settings(BaseModel):
    """Search budgets and runtime knobs, read from the environment (or .env)."""

    policy_budget: int = Field(2**24, ge=1)
    world_budget: int = Field(2**20, ge=1)
    max_variable_bits: int = Field(24, ge=1, le=64)
    ordering_limit: int = Field(40320, ge=1)
    lb2_max_additions: int = Field(2, ge=0, le=6)
    path_search_limit: int = Field(200_000, ge=1)
    threads: int = Field(1, ge=1, le=64)
    seed: int = 0
    log_level: str = "INFO"


_ENV_KEYS = {
    "policy_budget": "MATERIALITY_POLICY_BUDGET",
    "world_budget": "MATERIALITY_WORLD_BUDGET",
    "max_variable_bits": "MATERIALITY_MAX_VARIABLE_BITS",
    "ordering_limit": "MATERIALITY_ORDERING_LIMIT",
    "lb2_max_additions": "MATERIALITY_LB2_MAX_ADDITIONS",
    "path_search_limit": "MATERIALITY_PATH_SEARCH_LIMIT",
    "threads": "MATERIALITY_THREADS",
    "seed": "MATERIALITY_SEED",
    "log_level": "MATERIALITY_LOG_LEVEL",
}


def load_settings(**overrides) -> Settings:
    """Build settings from environment variables, then apply explicit overrides."""
    values = {}
    for field, key in _ENV_KEYS.items():
        raw = os.getenv(key)
        if raw is not None and raw != "":
            values[field] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Settings(**values)
    except ValidationError as e:
        bad = ", ".join(_ENV_KEYS.get(str(err["loc"][0]), str(err["loc"][0])) for err in e.errors())
        raise ValueError(f"Invalid materiality settings: {bad}") from e


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return load_settings()
