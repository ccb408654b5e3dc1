"""
Exact s(X;Y) for small discrete alphabets.

s(X;Y) = sup_{r_x != p_x} D(r_y || p_y) / D(r_x || p_x), r_y = sum_x r_x(x) p(y|x).

The search space is the ratio vector w(x) = r_x(x)/p_x(x). Candidates:
  * a quantized grid {c1, c1 + delta, ...} <= c2 on the first k_x - 1
    coordinates, the last coordinate fixed by sum_x p_x(x) w(x) = 1;
  * r_x = p_x restricted to every nonempty proper subset of the alphabet;
  * the limit r_x -> p_x along the top singular direction of Q, whose ratio
    is mCor^2.
The best grid points are then refined by pairwise mass transfers down to
delta/100. Points with D(r_x || p_x) < c0 (which includes r_x = p_x) are
skipped.
"""

import logging
import sys
import itertools
import numpy as np

from typing import List, Optional, Tuple
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import svdvals
from scipy.special import rel_entr, xlogy

from hyperco.core_types import DiscreteJoint, RatioMatrix, BudgetExceeded, DegenerateInput, DomainError
from hyperco.density import balance_ratio_matrix

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("discrete_oracle")

MAX_ALPHABET = 6
TOP_K = 5
REFINE_RESOLUTION = 100
MAX_REFINE_MOVES = 5000


class QuantGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=0.05, gt=0)
    c1: float = Field(default=1e-3, gt=0, lt=1)
    c2: float = Field(default=20.0, gt=1)
    c0: float = Field(default=1e-4, gt=0)
    max_points: int = Field(default=2_000_000, ge=1000)

    @model_validator(mode="after")
    def check_delta(self):
        if self.delta > (self.c2 - self.c1) / 2:
            raise ValueError(f"delta={self.delta} exceeds (c2 - c1)/2")
        return self


def _ratios(W: np.ndarray, px: np.ndarray, py: np.ndarray, cond: np.ndarray, c0: float) -> np.ndarray:
    """D(r_y||p_y)/D(r_x||p_x) for each row of W; -inf where D_x < c0."""
    r = W * px
    d_x = (px * xlogy(W, W)).sum(axis=1)
    r_y = r @ cond
    d_y = rel_entr(r_y, py).sum(axis=1)
    out = np.full(W.shape[0], -np.inf)
    ok = d_x >= c0
    out[ok] = d_y[ok] / d_x[ok]
    return out


def mcor_exact(j: DiscreteJoint) -> float:
    """Second singular value of Q = P_X^{-1/2} P_XY P_Y^{-1/2}."""
    px, py = j.marginal_x(), j.marginal_y()
    if np.any(px <= 0) or np.any(py <= 0):
        raise DegenerateInput("zero marginal entry")
    q = j.pmf / np.sqrt(px)[:, None] / np.sqrt(py)[None, :]
    sv = svdvals(q)
    if sv.size < 2:
        return 0.0
    return float(np.clip(sv[1], 0.0, 1.0))


def _grid_axes(px: np.ndarray, grid: QuantGrid, delta: float) -> List[np.ndarray]:
    axes = []
    for p in px[:-1]:
        upper = min(grid.c2, 1.0 / p)
        m = int(np.floor((upper - grid.c1) / delta + 1e-9))
        axes.append(grid.c1 + delta * np.arange(m + 1))
    return axes


def _effective_delta(px: np.ndarray, grid: QuantGrid) -> float:
    delta = grid.delta
    while True:
        count = float(np.prod([a.size for a in _grid_axes(px, grid, delta)]))
        if count <= grid.max_points:
            return delta
        factor = int(np.ceil((count / grid.max_points) ** (1.0 / (px.size - 1))))
        delta *= max(factor, 2)


def _top_k(scores: np.ndarray, W: np.ndarray, k: int) -> List[Tuple[float, np.ndarray]]:
    if scores.size == 0:
        return []
    k = min(k, scores.size)
    idx = np.argpartition(-scores, k - 1)[:k]
    idx = idx[np.argsort(-scores[idx], kind="stable")]
    return [(float(scores[i]), W[i].copy()) for i in idx if np.isfinite(scores[i])]


def _scan_slice(v0: float, rest: np.ndarray, px, py, cond, grid: QuantGrid) -> List[Tuple[float, np.ndarray]]:
    kx = px.size
    head = np.concatenate([np.full((rest.shape[0], 1), v0), rest], axis=1)
    last = (1.0 - head @ px[:-1]) / px[-1]
    keep = (last >= grid.c1) & (last <= grid.c2)
    if not keep.any():
        return []
    W = np.concatenate([head[keep], last[keep, None]], axis=1)
    assert W.shape[1] == kx
    return _top_k(_ratios(W, px, py, cond, grid.c0), W, TOP_K)


def _grid_search(px, py, cond, grid: QuantGrid, threads: int) -> List[Tuple[float, np.ndarray]]:
    delta = _effective_delta(px, grid)
    if delta > grid.delta:
        logger.warning(f"grid coarsened from delta={grid.delta} to {delta:.4g} to stay under {grid.max_points} points")
    axes = _grid_axes(px, grid, delta)
    if len(axes) > 1:
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, len(axes) - 1)
    else:
        rest = np.empty((1, 0))

    if threads > 1:
        slices = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_scan_slice)(v0, rest, px, py, cond, grid) for v0 in axes[0]
        )
    else:
        slices = [_scan_slice(v0, rest, px, py, cond, grid) for v0 in axes[0]]

    found = [c for s in slices for c in s]
    found.sort(key=lambda c: -c[0])
    return found[:TOP_K]


def _subset_candidates(px, py, cond, c0: float) -> List[Tuple[float, np.ndarray]]:
    kx = px.size
    out = []
    for size in range(1, kx):
        for subset in itertools.combinations(range(kx), size):
            W = np.zeros(kx)
            mass = px[list(subset)].sum()
            W[list(subset)] = 1.0 / mass
            out.append(W)
    W = np.array(out)
    scores = _ratios(W, px, py, cond, c0)
    return [(float(s), w) for s, w in zip(scores, W) if np.isfinite(s)]


def _refine(start: np.ndarray, score: float, px, py, cond, grid: QuantGrid) -> Tuple[float, np.ndarray]:
    """Coordinate ascent by pairwise transfers w_i += h, w_j -= h p_i/p_j, keeping sum p w = 1."""
    kx = px.size
    pairs = [(i, k) for i in range(kx) for k in range(kx) if i != k]
    w, best = start.copy(), score
    h = grid.delta
    moves = 0
    while h >= grid.delta / REFINE_RESOLUTION and moves < MAX_REFINE_MOVES:
        C = np.repeat(w[None, :], len(pairs), axis=0)
        for row, (i, k) in enumerate(pairs):
            C[row, i] += h
            C[row, k] -= h * px[i] / px[k]
        inside = np.all((C >= grid.c1) & (C <= grid.c2), axis=1)
        scores = np.full(len(pairs), -np.inf)
        if inside.any():
            scores[inside] = _ratios(C[inside], px, py, cond, grid.c0)
        top = int(np.argmax(scores))
        if scores[top] > best + 1e-15:
            w, best = C[top], float(scores[top])
            moves += 1
        else:
            h *= 0.5
    return best, w


def s_exact(j: DiscreteJoint, grid: Optional[QuantGrid] = None, threads: int = 1) -> float:
    grid = grid or QuantGrid()
    kx, ky = j.shape
    if kx > MAX_ALPHABET:
        raise BudgetExceeded(f"k_x={kx} exceeds the oracle's {MAX_ALPHABET}-symbol budget")
    if kx < 2 or ky < 2:
        raise DegenerateInput(f"both alphabets need at least 2 symbols, got {kx}x{ky}")
    px, py = j.marginal_x(), j.marginal_y()
    cond = j.conditional_y_given_x()

    best = mcor_exact(j) ** 2
    for score, _ in _subset_candidates(px, py, cond, grid.c0):
        best = max(best, score)

    for score, w in _grid_search(px, py, cond, grid, threads):
        refined, _ = _refine(w, score, px, py, cond, grid)
        best = max(best, refined)

    logger.debug(f"s_exact over {kx}x{ky} alphabet: {best:.6g}")
    return float(np.clip(best, 0.0, 1.0))


def tensorize_check(j: DiscreteJoint, grid: Optional[QuantGrid] = None, threads: int = 1) -> Tuple[float, float]:
    """(s(X;Y), s(X1 X2; Y1 Y2)) for two independent copies of j."""
    kx = j.shape[0]
    if kx * kx > 4:
        raise BudgetExceeded(f"two-copy alphabet of size {kx * kx} exceeds 4")
    return s_exact(j, grid, threads), s_exact(j.tensor(j), grid, threads)


######################################
# joint builders
######################################
def product_joint(px, py) -> DiscreteJoint:
    return DiscreteJoint.normalized(np.outer(px, py))


def identity_joint(k: int) -> DiscreteJoint:
    return DiscreteJoint(np.eye(k) / k)


def dsbs_joint(crossover: float) -> DiscreteJoint:
    """Doubly symmetric binary joint with P(X != Y) = crossover."""
    c = crossover
    return DiscreteJoint(np.array([[(1 - c) / 2, c / 2], [c / 2, (1 - c) / 2]]))


def _with_dominant(rare_rows: np.ndarray, alpha: float) -> DiscreteJoint:
    if alpha >= 1.0:
        return DiscreteJoint.normalized(rare_rows)
    py_rare = rare_rows.sum(axis=0) / rare_rows.sum()
    dominant = (1.0 - alpha) * py_rare
    return DiscreteJoint.normalized(np.vstack([rare_rows, dominant]))


def example2_joint(k: int, alpha: float) -> DiscreteJoint:
    """Y = X ~ Unif{1..k} on the rare part (mass alpha); Y an independent copy elsewhere."""
    if k < 2 or not (0 < alpha <= 1):
        raise DomainError(f"need k >= 2 and alpha in (0, 1], got k={k}, alpha={alpha}")
    return _with_dominant(alpha * np.eye(k) / k, alpha)


def example3_joint(k: int, alpha: float, eps: float) -> DiscreteJoint:
    """Random corruption on the rare part: Y = X w.p. 1 - eps, each other symbol w.p. eps/(k-1)."""
    if k < 2 or not (0 < alpha <= 1) or not (0 <= eps <= (k - 1) / k):
        raise DomainError(f"need k >= 2, alpha in (0, 1], eps in [0, (k-1)/k]; got {k}, {alpha}, {eps}")
    channel = np.full((k, k), eps / (k - 1))
    np.fill_diagonal(channel, 1.0 - eps)
    return _with_dominant(alpha * channel / k, alpha)


def mixture_joint(rare: DiscreteJoint, alpha: float, n_dominant: int = 1) -> DiscreteJoint:
    """Rare part with mass alpha; n_dominant extra x-symbols whose Y follows the rare Y-marginal."""
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    rows = [alpha * rare.pmf]
    if alpha < 1.0:
        dom = (1.0 - alpha) / n_dominant * rare.marginal_y()
        rows.append(np.tile(dom, (n_dominant, 1)))
    return DiscreteJoint.normalized(np.vstack(rows))


def random_joint(kx: int, ky: int, rng: np.random.Generator, floor: float = 1e-3) -> DiscreteJoint:
    p = rng.dirichlet(np.ones(kx * ky)).reshape(kx, ky) + floor
    return DiscreteJoint.normalized(p)


def sample_codes(j: DiscreteJoint, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    kx, ky = j.shape
    flat = rng.choice(kx * ky, size=n, p=j.pmf.ravel())
    return flat // ky, flat % ky


def exact_ratio_matrix(j: DiscreteJoint, x_codes, y_codes, floor: float = 1e-12, balance: bool = True) -> RatioMatrix:
    """
    a[l][i] = P(x_i, y_l) / (P(x_i) P(y_l)) from the true pmf.

    The sampled codes have empirical frequencies that differ from the pmf, so by
    default the matrix is balanced the same way as the kernel estimate.
    """
    table = j.pmf / np.outer(j.marginal_x(), j.marginal_y())
    x_codes, y_codes = np.asarray(x_codes), np.asarray(y_codes)
    a = table[x_codes][:, y_codes].T
    a = np.maximum(a, floor)
    if balance:
        return balance_ratio_matrix(a)
    return RatioMatrix(a)
