"""
Kernel density estimate of the ratio matrix A.

    a[j][i] = n * sum_k Kx(x_i - x_k) Ky(y_j - y_k) / (sum_k Kx(x_i - x_k) * sum_k Ky(y_j - y_k))

This is the plug-in estimate of p_xy(X_i, Y_j) / (p_x(X_i) p_y(Y_j)) with a
Gaussian product kernel and leave-in sums. The kernel normalizing constants
cancel, so only the bandwidths matter. This normalization is a fixed choice of
this package; any other density estimator producing a RatioMatrix can be
plugged into hc_estimator.maximize_ratio.

Balancing: the raw plug-in matrix is then Sinkhorn-scaled, a[j][i] <- r_j a[j][i] c_i,
until every row mean and every column mean is 1. Row means of 1 give v(1) = 1
(uniform weights map to the uniform output), column means of 1 give
mean(v) = mean(w), so D_y >= 0 on the whole feasible set and D_y / D_x <= 1.
Without it the smoothed marginals disagree with the empirical ones and the
ratio can blow past 1 or go negative. KdeConfig(balance=False) keeps the raw
plug-in values.

Determinism: the fill is a single BLAS matrix product over the full kernel
matrices and the balancing is a deterministic sequence of matrix-vector sweeps. For a
fixed numpy/BLAS build and thread count the result is bit-identical across runs.
"""

import logging
import sys
import numpy as np

from typing import Literal, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hyperco.core_types import PairedSamples, RatioMatrix, DegenerateInput, DomainError

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("density")

BALANCE_TOL = 1e-10
BALANCE_MAX_ITERS = 2000


class KdeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    bandwidth_rule: Literal["silverman", "scott", "fixed"] = "silverman"
    h_x: Optional[float] = Field(default=None, gt=0)
    h_y: Optional[float] = Field(default=None, gt=0)
    kernel: Literal["gaussian"] = "gaussian"
    epsilon_floor: float = Field(default=1e-12, gt=0)
    balance: bool = True

    @model_validator(mode="after")
    def check_fixed(self):
        if self.bandwidth_rule == "fixed" and (self.h_x is None or self.h_y is None):
            raise ValueError("fixed bandwidth rule needs both h_x and h_y")
        return self

    @classmethod
    def fixed(cls, h_x: float, h_y: float, **kwargs) -> "KdeConfig":
        return cls(bandwidth_rule="fixed", h_x=h_x, h_y=h_y, **kwargs)


def _sample_std(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=np.float64)
    if v.size < 2:
        raise DegenerateInput(f"bandwidth needs at least 2 samples, got {v.size}")
    sigma = float(np.std(v, ddof=1))
    if not sigma > 0:
        raise DegenerateInput("sample standard deviation is zero")
    return sigma


def silverman_bandwidth(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return 1.06 * _sample_std(v) * v.size ** (-0.2)


def scott_bandwidth(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return _sample_std(v) * v.size ** (-0.2)


def resolve_bandwidths(s: PairedSamples, cfg: KdeConfig) -> Tuple[float, float]:
    if cfg.bandwidth_rule == "fixed":
        return float(cfg.h_x), float(cfg.h_y)
    rule = silverman_bandwidth if cfg.bandwidth_rule == "silverman" else scott_bandwidth
    return rule(s.x), rule(s.y)


def _gaussian_gram(v: np.ndarray, h: float) -> np.ndarray:
    d = (v[:, None] - v[None, :]) / h
    return np.exp(-0.5 * d * d)


def balance_ratio_matrix(a, tol: float = BALANCE_TOL, max_iters: int = BALANCE_MAX_ITERS) -> RatioMatrix:
    """
    Sinkhorn scaling of a positive square matrix to unit row and column means.

    Alternates c = n / (A^T r) and r = n / (A c); after each sweep the row means
    are exactly one and the loop stops once every column mean is within tol of
    one. Non-convergence is logged and the last iterate is returned.
    """
    m = np.asarray(a.a if isinstance(a, RatioMatrix) else a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"balancing needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if not np.all(m > 0):
        raise DegenerateInput("balancing needs strictly positive entries; apply the floor first")

    r = np.ones(n)
    c = np.ones(n)
    err = np.inf
    for it in range(max_iters):
        c = n / (m.T @ r)
        r = n / (m @ c)
        err = float(np.max(np.abs(c * (m.T @ r) / n - 1.0)))
        if err <= tol:
            break
    else:
        logger.warning(f"balancing stopped after {max_iters} sweeps, column error={err:.3g}")
    logger.debug(f"balancing: sweeps={it + 1}, column error={err:.3g}")
    return RatioMatrix(r[:, None] * m * c[None, :])


def estimate_ratio_matrix(s: PairedSamples, cfg: Optional[KdeConfig] = None) -> RatioMatrix:
    cfg = cfg or KdeConfig()
    s.require_nonconstant()
    h_x, h_y = resolve_bandwidths(s, cfg)
    logger.debug(f"kde bandwidths: h_x={h_x:.6g}, h_y={h_y:.6g}, n={s.n}")

    kx = _gaussian_gram(s.x, h_x)  # kx[i, k]
    ky = _gaussian_gram(s.y, h_y)  # ky[j, k]
    joint = ky @ kx.T              # joint[j, i] = sum_k ky[j, k] kx[i, k]
    px = kx.sum(axis=1)
    py = ky.sum(axis=1)

    a = s.n * joint / (py[:, None] * px[None, :])
    np.maximum(a, cfg.epsilon_floor, out=a)
    if cfg.balance:
        return balance_ratio_matrix(a)
    return RatioMatrix(a)
