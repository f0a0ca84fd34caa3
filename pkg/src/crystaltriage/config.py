"""Flat key-value configuration files with environment overrides.

Config files are YAML mappings (plain JSON also parses). Any key can be
overridden by an environment variable named CRYSTAL_<KEY-IN-UPPERCASE>.
"""

import os
from pathlib import Path
from typing import Mapping, Optional

import yaml

ENV_PREFIX = "CRYSTAL_"


def load_flat_config(path: str | Path | None,
                     env: Optional[Mapping[str, str]] = None) -> dict:
    """Read a flat mapping from path (optional) and fold in env overrides."""
    data: dict = {}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ValueError(f"config must be a flat mapping: {path}")
        for key, value in raw.items():
            if isinstance(value, (dict, list)):
                raise ValueError(f"config key {key!r} is not flat")
            data[str(key)] = value
    env = os.environ if env is None else env
    for name, value in env.items():
        if name.startswith(ENV_PREFIX):
            data[name[len(ENV_PREFIX):].lower()] = _coerce(value)
    return data


def _coerce(text: str):
    """Environment values arrive as strings; YAML rules give them types."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text
