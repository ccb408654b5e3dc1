"""Closed-form values and lower bounds on s(X;Y), all in nats and floored at 0."""

import logging
import sys
import numpy as np
import pandas as pd

from typing import NamedTuple, Optional, Sequence
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hyperco.core_types import binary_entropy, DomainError

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("analytic_bounds")


class BoundInput(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=1.0, gt=0, le=1)
    rho: float = Field(default=0.0, gt=-1, lt=1)
    k: int = Field(default=2, ge=2)
    eps: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def check_eps(self):
        if self.eps > (self.k - 1) / self.k:
            raise ValueError(f"eps must be at most (k-1)/k = {(self.k - 1) / self.k}")
        return self


class MixturePrediction(NamedTuple):
    mcor: float
    dcor: float
    mic_upper: float   # upper bound only


def _check_alpha(alpha: float) -> None:
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")


def _check_rho(rho: float) -> None:
    if not (-1 < rho < 1):
        raise DomainError(f"|rho| must be below 1, got {rho}")


def _check_k_eps(k: int, eps: float) -> None:
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}")
    if not (0 <= eps <= (k - 1) / k):
        raise DomainError(f"eps must lie in [0, {(k - 1) / k}], got {eps}")


def gaussian_s(rho: float) -> float:
    """s(X;Y) of a bivariate Gaussian with correlation rho."""
    _check_rho(rho)
    return rho * rho


def ex1_bound(rho: float, alpha: float) -> float:
    _check_rho(rho)
    _check_alpha(alpha)
    lead = np.log(1.0 / (1.0 - rho * rho))
    numerator = lead + np.log(1.0 / (1.0 + rho * rho))
    if numerator <= 0:
        return 0.0
    return float(numerator / (lead + binary_entropy(alpha) / alpha))


def ex2_bound(k: int, alpha: float) -> float:
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}")
    _check_alpha(alpha)
    return float(np.log(k) / (np.log(k) + np.log(1.0 / alpha)))


def ex3_bound(k: int, alpha: float, eps: float) -> float:
    _check_alpha(alpha)
    _check_k_eps(k, eps)
    numerator = np.log(k) - binary_entropy(eps) - eps * np.log(k - 1)
    return float(max(numerator / np.log(k / alpha), 0.0))


def ex3_mcor(k: int, alpha: float, eps: float) -> float:
    """mCor itself (not its square) of the random-corruption construction."""
    _check_alpha(alpha)
    _check_k_eps(k, eps)
    return float(max(np.sqrt(alpha) * (1.0 - k * eps / (k - 1)), 0.0))


def theorem2_scalings(alpha: float, base: Sequence[float]) -> MixturePrediction:
    """Mixture-level values from the rare-part (mcor_r, dcor_r, mic_r)."""
    _check_alpha(alpha)
    mcor_r, dcor_r, mic_r = base
    for name, value in (("mcor", mcor_r), ("dcor", dcor_r), ("mic", mic_r)):
        if not (0 <= value <= 1):
            raise DomainError(f"{name} of the rare part must be in [0, 1], got {value}")
    return MixturePrediction(np.sqrt(alpha) * mcor_r, alpha * dcor_r, alpha * mic_r)


def bound_sweep(example: int, k: int = 2, rho: float = 0.8, eps: float = 0.1,
                alphas: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """Bound as a function of alpha for one of the three examples."""
    if alphas is None:
        alphas = np.round(np.linspace(0.01, 1.0, 100), 10)
    rows = []
    for alpha in alphas:
        if example == 1:
            rows.append({"alpha": alpha, "s_lower_bound": ex1_bound(rho, alpha)})
        elif example == 2:
            rows.append({"alpha": alpha, "s_lower_bound": ex2_bound(k, alpha)})
        elif example == 3:
            rows.append({"alpha": alpha, "s_lower_bound": ex3_bound(k, alpha, eps), "mcor": ex3_mcor(k, alpha, eps)})
        else:
            raise DomainError(f"unknown example {example}; expected 1, 2 or 3")
    logger.info(f"bound sweep: example={example}, points={len(rows)}")
    return pd.DataFrame(rows)
