"""
Shared data model, error types and numeric conventions.

All logarithms are natural (nats). The ratio s(X;Y) is base-invariant, so the
choice only affects the intermediate divergences reported in diagnostics.

Normalization note: the output-side ratios are v_j = (1/n) * sum_i a[j][i] * w_i.
The matrix shorthand "v = A^T w" drops the 1/n factor; every function in this
package uses the elementwise form.
"""

import logging
import sys
import numpy as np

from dataclasses import dataclass
from typing import Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import entr, xlogy

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("core_types")

W_MIN = 1e-6
W_MAX = 1e6
MEAN_TOL = 1e-9
PMF_TOL = 1e-12


class HypercoError(Exception):
    """Base class of every error raised by the package."""


class DomainError(HypercoError, ValueError):
    pass


class DegenerateInput(HypercoError, ValueError):
    pass


class InfeasiblePoint(HypercoError):
    pass


class OptimizationFailed(HypercoError):
    def __init__(self, message: str, seed: Optional[int] = None):
        super().__init__(message if seed is None else f"{message} (seed={seed})")
        self.seed = seed


class BudgetExceeded(HypercoError):
    pass


class DataError(HypercoError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int, column: str):
        super().__init__(f"{message} at row {row}, column {column!r}")
        self.row = row
        self.column = column


class SchemaError(DataError):
    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PairedSamples:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _frozen(np.ravel(self.x))
        y = _frozen(np.ravel(self.y))
        if x.shape != y.shape:
            raise DomainError(f"x and y must have the same length, got {x.size} and {y.size}")
        if x.size < 2:
            raise DomainError(f"need at least 2 paired samples, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("samples must be finite (no NaN/Inf)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, x, y) -> "PairedSamples":
        return cls(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.x.size)

    def swap(self) -> "PairedSamples":
        return PairedSamples(self.y, self.x)

    def subset(self, idx) -> "PairedSamples":
        idx = np.asarray(idx)
        return PairedSamples(self.x[idx], self.y[idx])

    def require_nonconstant(self) -> None:
        if np.ptp(self.x) == 0:
            raise DegenerateInput("x is constant")
        if np.ptp(self.y) == 0:
            raise DegenerateInput("y is constant")


@dataclass(frozen=True)
class WeightVector:
    """Likelihood ratios w_i = r_x(X_i)/p_x(X_i) evaluated at the samples."""
    w: np.ndarray

    def __post_init__(self):
        w = _frozen(np.ravel(self.w))
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise DomainError("weights must be a nonempty finite vector")
        if np.any(w < 0):
            raise DomainError("weights must be non-negative")
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.ones(n))

    @property
    def n(self) -> int:
        return int(self.w.size)

    def mean_is_one(self, tol: float = MEAN_TOL) -> bool:
        return abs(float(np.mean(self.w)) - 1.0) <= tol

    def kl(self) -> float:
        return kl_from_weights(self)


@dataclass(frozen=True)
class RatioMatrix:
    """a[j][i] ~ p_xy(X_i, Y_j) / (p_x(X_i) p_y(Y_j)); row j is an output sample."""
    a: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"ratio matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise DomainError("ratio matrix entries must be finite and non-negative")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    def output_ratios(self, w: np.ndarray) -> np.ndarray:
        """v_j = (1/n) sum_i a[j][i] w_i."""
        return self.a @ w / self.n


class EstimateResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0, le=1.0)
    raw_value: float
    restarts_used: int = Field(ge=0)
    best_objective: float
    converged: bool
    seed: int

    @classmethod
    def from_raw(cls, raw_value: float, **kwargs) -> "EstimateResult":
        return cls(value=float(np.clip(raw_value, 0.0, 1.0)), raw_value=float(raw_value), **kwargs)


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint pmf over finite alphabets; rows index x, columns index y."""
    pmf: np.ndarray

    def __post_init__(self):
        p = _frozen(np.atleast_2d(self.pmf))
        if p.ndim != 2:
            raise DomainError(f"pmf must be a matrix, got {p.ndim} dimensions")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("pmf entries must be finite and non-negative")
        if abs(float(p.sum()) - 1.0) > PMF_TOL:
            raise DomainError(f"pmf must sum to 1, got {p.sum():.15g}")
        if np.any(p.sum(axis=1) <= 0) or np.any(p.sum(axis=0) <= 0):
            raise DegenerateInput("every marginal entry must be positive")
        object.__setattr__(self, "pmf", p)

    @classmethod
    def normalized(cls, counts) -> "DiscreteJoint":
        counts = np.asarray(counts, dtype=np.float64)
        return cls(counts / counts.sum())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pmf.shape

    def marginal_x(self) -> np.ndarray:
        return self.pmf.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.pmf.sum(axis=0)

    def conditional_y_given_x(self) -> np.ndarray:
        return self.pmf / self.marginal_x()[:, None]

    def swap(self) -> "DiscreteJoint":
        return DiscreteJoint(self.pmf.T)

    def tensor(self, other: "DiscreteJoint") -> "DiscreteJoint":
        # row (x1, x2) -> x1 * kx2 + x2, same for columns
        return DiscreteJoint.normalized(np.kron(self.pmf, other.pmf))


def binary_entropy(p: float) -> float:
    """H(p) in nats with 0 ln 0 = 0."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"binary entropy needs p in [0, 1], got {p}")
    return float(entr(p) + entr(1.0 - p))


def kl_from_weights(w: WeightVector) -> float:
    """Empirical D(r_x || p_x) = (1/n) sum_i w_i ln w_i."""
    d = float(np.mean(xlogy(w.w, w.w)))
    if w.mean_is_one():
        # Jensen: non-negative on the mean-one slice
        assert d >= -1e-12, f"negative divergence {d} on mean-one weights"
        d = max(d, 0.0)
    return d
