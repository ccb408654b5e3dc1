"""
Synthetic rare-correlated / dominant-independent mixtures.

A correlated dataset puts ceil(alpha * n) samples in the rare block, with
x ~ Unif[0, 1] and y = f(x) + noise, and the rest in the dominant block, with x
drawn from the dominant range (default [1, 1.1]) and y = f(U) + noise for a
fresh U ~ Unif[0, 1]. Both blocks then share the same Y-marginal. A null dataset
draws every sample the dominant way, with x spread over the union of the two
ranges.
"""

import logging
import sys
import numpy as np

from enum import Enum
from typing import List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hyperco.core_types import PairedSamples, DomainError

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("synth")

DEFAULT_DOMINANT_RANGE = (1.0, 1.1)
MIRROR_DOMINANT_RANGE = (-0.1, 0.0)


class FunctionFamily(str, Enum):
    linear = "linear"
    quadratic = "quadratic"
    cubic = "cubic"
    sin4pi = "sin4pi"
    sin16pi = "sin16pi"
    fourth_root = "fourth_root"
    circle = "circle"
    step = "step"


class MixtureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: FunctionFamily = FunctionFamily.linear
    alpha: float = Field(default=0.05, gt=0, le=1)
    sigma2: float = Field(default=0.0, ge=0)
    n: int = Field(default=320, ge=10)
    correlated: bool = True
    seed: int = 0
    mirror: bool = False
    dominant_range: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def check_ranges(self):
        if self.dominant_range is not None:
            lo, hi = self.dominant_range
            if not lo < hi:
                raise ValueError(f"dominant_range must be increasing, got {self.dominant_range}")
        return self

    @property
    def n_rare(self) -> int:
        return int(np.ceil(self.alpha * self.n - 1e-9)) if self.correlated else 0

    def x_range(self) -> Tuple[float, float]:
        if self.dominant_range is not None:
            return self.dominant_range
        return MIRROR_DOMINANT_RANGE if self.mirror else DEFAULT_DOMINANT_RANGE

    def null_range(self) -> Tuple[float, float]:
        lo, hi = self.x_range()
        return min(lo, 0.0), max(hi, 1.0)


def eval_family(fam: FunctionFamily, x):
    """f(x) on [0, 1]; accepts a scalar or an array."""
    fam = FunctionFamily(fam)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{fam.value} is defined on [0, 1]")

    if fam is FunctionFamily.linear:
        y = arr.copy()
    elif fam is FunctionFamily.quadratic:
        y = arr ** 2
    elif fam is FunctionFamily.cubic:
        y = arr ** 3
    elif fam is FunctionFamily.sin4pi:
        y = np.sin(4 * np.pi * arr)
    elif fam is FunctionFamily.sin16pi:
        y = np.sin(16 * np.pi * arr)
    elif fam is FunctionFamily.fourth_root:
        y = arr ** 0.25
    elif fam is FunctionFamily.circle:
        y = 0.5 * np.sin(2 * np.pi * arr)
    else:
        y = (arr > 0.5).astype(np.float64)

    return float(y) if y.ndim == 0 else y


def _noise(rng: np.random.Generator, sigma2: float, size: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(sigma2), size=size) if sigma2 > 0 else np.zeros(size)


def _rare_block(fam: FunctionFamily, rng: np.random.Generator, m: int) -> Tuple[np.ndarray, np.ndarray]:
    t = rng.uniform(0.0, 1.0, size=m)
    if fam is FunctionFamily.circle:
        # parametric circle of unit diameter, x folded into [0, 1]
        return 0.5 + 0.5 * np.cos(2 * np.pi * t), eval_family(fam, t)
    return t, eval_family(fam, t)


def generate(spec: MixtureSpec) -> PairedSamples:
    rng = np.random.default_rng(spec.seed)
    m = spec.n_rare
    rest = spec.n - m

    x_rare, y_rare = _rare_block(spec.family, rng, m)
    lo, hi = spec.x_range() if spec.correlated else spec.null_range()
    x_dom = rng.uniform(lo, hi, size=rest)
    y_dom = eval_family(spec.family, rng.uniform(0.0, 1.0, size=rest))

    x = np.concatenate([x_rare, x_dom])
    y = np.concatenate([y_rare, y_dom]) + _noise(rng, spec.sigma2, spec.n)
    logger.debug(f"generated {spec.family.value}: n={spec.n}, rare={m}, correlated={spec.correlated}, seed={spec.seed}")
    return PairedSamples(x, y)


######################################
# Benchmark rows: one (alpha, sigma2) setting per family
######################################
TABLE1_ROWS = [
    (FunctionFamily.linear, 0.05, 0.03),
    (FunctionFamily.quadratic, 0.10, 0.10),
    (FunctionFamily.cubic, 0.10, 0.00),
    (FunctionFamily.sin4pi, 0.05, 0.03),
    (FunctionFamily.sin16pi, 0.10, 0.00),
    (FunctionFamily.fourth_root, 0.05, 0.01),
    (FunctionFamily.circle, 0.10, 0.00),
    (FunctionFamily.step, 0.10, 0.03),
]


def table1_specs(n: int = 320, seed: int = 0) -> List[MixtureSpec]:
    return [MixtureSpec(family=fam, alpha=alpha, sigma2=sigma2, n=n, seed=seed) for fam, alpha, sigma2 in TABLE1_ROWS]


def table1_scores(seed: int = 0, n: int = 320, measures: Optional[List[str]] = None, configs=None):
    """Dependent vs independent scores of every measure on each benchmark row, as a DataFrame."""
    import pandas as pd
    import hyperco.utils as utils
    from hyperco.power_harness import score_dataset, measure_label, ALL_MEASURES

    measures = measures or list(ALL_MEASURES)
    rows = []
    for idx, spec in enumerate(table1_specs(n, seed)):
        dep = spec.model_copy(update={"seed": utils.derive_seed(seed, idx, 1)})
        indep = spec.model_copy(update={"seed": utils.derive_seed(seed, idx, 0), "correlated": False})
        dep_scores = score_dataset(generate(dep), measures, configs, seed=dep.seed)
        indep_scores = score_dataset(generate(indep), measures, configs, seed=indep.seed)
        for measure in measures:
            rows.append({
                "family": spec.family.value,
                "alpha": spec.alpha,
                "sigma2": spec.sigma2,
                "measure": measure_label(measure),
                "dep": dep_scores[measure],
                "indep": indep_scores[measure],
            })
    logger.info(f"table1 scores: rows={len(TABLE1_ROWS)}, measures={measures}, seed={seed}")
    return pd.DataFrame(rows)
