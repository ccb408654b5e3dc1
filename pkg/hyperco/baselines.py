"""
Comparison measures: Pearson correlation, distance correlation, maximal
correlation and an equal-frequency approximation of MIC.

mcor and mic bin each coordinate by rank (equal-frequency bins with tied values
kept together), so both are invariant under strictly increasing maps. The MIC
here searches equal-frequency grids only, without the optimal-partition
search, and is reported as "MIC-approx"; it is biased low against MINE-style
implementations.
"""

import logging
import sys
import numpy as np

from typing import Optional
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import pdist, squareform
from scipy.special import rel_entr
from scipy.stats import pearsonr, rankdata

from hyperco.core_types import PairedSamples, DiscreteJoint, DegenerateInput, DomainError
from hyperco.discrete_oracle import mcor_exact

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("baselines")

MIC_LABEL = "MIC-approx"


class BaselineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mcor_bins: Optional[int] = Field(default=None, ge=2)     # None: ceil(sqrt(n))
    mic_exponent: float = Field(default=0.6, gt=0, lt=1)
    mic_max_axis: Optional[int] = Field(default=None, ge=2)  # None: floor(n^0.3) + 1

    def bins_for(self, n: int) -> int:
        return self.mcor_bins if self.mcor_bins is not None else max(2, int(np.ceil(np.sqrt(n))))

    def max_axis_for(self, n: int) -> int:
        return self.mic_max_axis if self.mic_max_axis is not None else max(2, int(np.floor(n ** 0.3)) + 1)


def pearson(s: PairedSamples) -> float:
    s.require_nonconstant()
    r = pearsonr(s.x, s.y).statistic
    return float(np.clip(r, -1.0, 1.0))


def _centered_distances(v: np.ndarray) -> np.ndarray:
    d = squareform(pdist(v[:, None], metric="euclidean"))
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def dcor(s: PairedSamples) -> float:
    if s.n < 4:
        raise DomainError(f"distance correlation needs n >= 4, got {s.n}")
    s.require_nonconstant()
    A = _centered_distances(s.x)
    B = _centered_distances(s.y)
    n2 = s.n ** 2
    dcov2_xy = np.vdot(A, B) / n2
    dvar_x = np.vdot(A, A) / n2
    dvar_y = np.vdot(B, B) / n2
    if dvar_x <= 0 or dvar_y <= 0:
        return 0.0
    r2 = max(dcov2_xy, 0.0) / np.sqrt(dvar_x * dvar_y)
    return float(np.clip(np.sqrt(r2), 0.0, 1.0))


def rank_bins(v: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin index in [0, bins); tied values share a bin."""
    r = rankdata(v, method="average")
    return np.minimum(((r - 0.5) * bins / v.size).astype(np.int64), bins - 1)


def _contingency(bx: np.ndarray, by: np.ndarray, a: int, b: int) -> np.ndarray:
    counts = np.bincount(bx * b + by, minlength=a * b).reshape(a, b).astype(np.float64)
    # empty bins (from ties) would give zero marginals
    counts = counts[counts.sum(axis=1) > 0][:, counts.sum(axis=0) > 0]
    return counts


def mcor(s: PairedSamples, cfg: Optional[BaselineConfig] = None) -> float:
    cfg = cfg or BaselineConfig()
    s.require_nonconstant()
    bins = cfg.bins_for(s.n)
    if s.n < 2 * bins:
        raise DomainError(f"maximal correlation with {bins} bins needs n >= {2 * bins}, got {s.n}")
    counts = _contingency(rank_bins(s.x, bins), rank_bins(s.y, bins), bins, bins)
    if min(counts.shape) < 2:
        return 0.0
    return mcor_exact(DiscreteJoint.normalized(counts))


def _mutual_information(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    return float(rel_entr(p, px * py).sum())


def mic(s: PairedSamples, cfg: Optional[BaselineConfig] = None) -> float:
    cfg = cfg or BaselineConfig()
    if s.n < 16:
        raise DomainError(f"MIC needs n >= 16, got {s.n}")
    s.require_nonconstant()
    budget = s.n ** cfg.mic_exponent
    max_axis = cfg.max_axis_for(s.n)

    best = 0.0
    x_bins = {}
    y_bins = {}
    for a in range(2, max_axis + 1):
        for b in range(2, max_axis + 1):
            if a * b > budget:
                continue
            bx = x_bins.setdefault(a, rank_bins(s.x, a))
            by = y_bins.setdefault(b, rank_bins(s.y, b))
            counts = _contingency(bx, by, a, b)
            if min(counts.shape) < 2:
                continue
            score = _mutual_information(counts) / np.log(min(a, b))
            best = max(best, score)
    return float(np.clip(best, 0.0, 1.0))
