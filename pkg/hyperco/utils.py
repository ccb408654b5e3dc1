import logging
import sys
import json
import os
import copy
import toml
import numpy as np

from typing import Dict, Optional, Any

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("utils")

script_dir = os.path.dirname(os.path.abspath(__file__))
config_path = os.path.join(script_dir, "config.json")

THREADS_ENV = "HYPERCO_THREADS"

default_config = {
    "projectName": "hyperco",
    "kde": {"bandwidth_rule": "silverman", "kernel": "gaussian", "epsilon_floor": 1e-12, "balance": True},
    "optimizer": {
        "restarts": 10,
        "max_iters": 500,
        "step_size": 0.1,
        "init_noise_sigma2": 0.01,
        "tol": 1e-6,
        "seed": 0,
        "d_x_floor": 1e-4,
        "kkt_tol": 1e-5
    },
    "grid": {"delta": 0.05, "c1": 1e-3, "c2": 20.0, "c0": 1e-4, "max_points": 2_000_000},
    "baseline": {"mic_exponent": 0.6},
    "power": {"n_null": 100, "n_alt": 100, "fpr": 0.05},
    "screen": {"min_complete": 30},
    "runtime": {"threads": 1}
}

def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    config = None
    path = path or config_path

    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
    except Exception as e:
        logger.error(f"Error loading config: {e}")
        config = copy.deepcopy(default_config)

    return merge_config(default_config, config)

def load_toml_overrides(path: str) -> Dict[str, Any]:
    """Read a user TOML file whose tables mirror the sections of config.json."""
    with open(path, "r", encoding="utf-8") as f:
        overrides = toml.load(f)
    logger.info(f"config overrides from {path}: {sorted(overrides)}")
    return overrides

def merge_config(base: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged

def resolve_threads(cli_value: Optional[int] = None, cfg: Optional[Dict[str, Any]] = None) -> int:
    # env > --threads > config > 1
    env_value = os.environ.get(THREADS_ENV)
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"ignoring non-integer {THREADS_ENV}={env_value!r}")
    if cli_value is not None:
        return max(1, int(cli_value))
    cfg = cfg if cfg is not None else config
    return max(1, int(cfg.get("runtime", {}).get("threads", 1)))

def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit child seed of an integer key path, e.g. (seed, trial)."""
    entropy = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & 0x7FFFFFFFFFFFFFFF

def set_log_level(verbose: bool = False, quiet: bool = False) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif quiet:
        logging.getLogger().setLevel(logging.WARNING)

config = load_config()
