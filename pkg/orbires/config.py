import copy
import os
from pathlib import Path

import yaml

from .errors import InputError

CONFIG_FILE = Path("config.yaml")
SEED_VARIABLE = "ORBIRES_SEED"

DEFAULT_CONFIG = {
    "seed": 20240601,
    "support_cap": 16,
    "step_cap": 64,

    # Two-threshold rank gap; values in between are inconclusive
    "tolerances": {
        "rank_gap_low": 1e-9,
        "rank_gap_high": 1e-6,
        "residual": 1e-8,
        "fd_step": 1e-5,
        "constraint": 1e-12,
    },

    # Sample counts per verify suite
    "samples": {
        "kernel": 100,
        "morse": 100,
        "collar": 50,
        "moser": 50,
    },

    "perturbation": {
        "degree": 4,
        "scale": "1/100",
    },
    "quadrature_order": 64,
    "continuity_terms": 10000,

    "logging": {
        "level": "WARNING",
    },
}


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path=None):
    """
    Built-in defaults, overlaid with a YAML file and the seed variable.

    A missing default config.yaml is fine; a missing explicit path is not.
    """
    config_path = Path(path) if path is not None else CONFIG_FILE
    loaded = {}
    if config_path.exists():
        with config_path.open("r", encoding="utf-8") as f:
            try:
                loaded = yaml.safe_load(f) or {}
            except yaml.YAMLError as exc:
                raise InputError(f"cannot parse {config_path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError(f"{config_path} must hold a mapping")
    elif path is not None:
        raise InputError(f"config file not found: {config_path}")

    config = _merge(DEFAULT_CONFIG, loaded)

    seed = os.environ.get(SEED_VARIABLE)
    if seed is not None:
        try:
            config["seed"] = int(seed)
        except ValueError:
            raise InputError(f"{SEED_VARIABLE} must be an integer, got {seed!r}") from None

    return config
