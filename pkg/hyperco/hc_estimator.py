"""
Sample estimator of the hypercontractivity coefficient s(X;Y).

With w_i = r_x(X_i)/p_x(X_i) the estimator maximizes

    ln D_y(w) - ln D_x(w),   D_x = (1/n) sum_i w_i ln w_i,
                             D_y = (1/n) sum_j v_j ln v_j,  v_j = (1/n) sum_i a[j][i] w_i

over the box-constrained scaled simplex {w_min <= w_i <= w_max, mean(w) = 1} by
projected gradient ascent from several random starts. The landscape is not
concave; the best restart is reported and no global optimality is claimed.

A restart stops once the projected-gradient residual max|P(w + grad) - w| falls
below kkt_tol, when no backtracked step improves the objective, or after
max_iters. The ratio matrix is expected to be balanced (see density); then
D_y >= 0 everywhere and the ratio never exceeds one.
"""

import logging
import sys
import traceback
import numpy as np

from typing import List, Optional, Tuple
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq
from scipy.special import xlogy

import hyperco.utils as utils
from hyperco.core_types import (
    PairedSamples, RatioMatrix, WeightVector, EstimateResult,
    InfeasiblePoint, OptimizationFailed, W_MIN, W_MAX,
)
from hyperco.density import KdeConfig, estimate_ratio_matrix

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("hc_estimator")

STALL_ITERS = 5
MAX_HALVINGS = 40
MAX_STEP_GROWTH = 2.0 ** 20
# a local maximum is reported as converged only below this projected-gradient residual
KKT_ACCEPT = 1e-3


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    restarts: int = Field(default=10, ge=1)
    max_iters: int = Field(default=500, ge=1)
    step_size: float = Field(default=0.1, gt=0)
    init_noise_sigma2: float = Field(default=0.01, ge=0)
    tol: float = Field(default=1e-6, gt=0)
    seed: int = 0
    d_x_floor: float = Field(default=1e-4, gt=0)
    epsilon_floor: float = Field(default=1e-12, gt=0)
    kkt_tol: float = Field(default=1e-5, gt=0)


def _divergences(w: np.ndarray, a: RatioMatrix, epsilon_floor: float) -> Tuple[float, float, np.ndarray]:
    v = np.maximum(a.output_ratios(w), epsilon_floor)
    d_x = float(np.mean(xlogy(w, w)))
    d_y = float(np.mean(v * np.log(v)))
    return d_x, d_y, v


def _check_feasible(d_x: float, d_y: float, d_x_floor: float) -> None:
    if not d_x >= d_x_floor:
        raise InfeasiblePoint(f"D_x={d_x:.3g} below floor {d_x_floor:.3g}")
    if not d_y > 0:
        raise InfeasiblePoint(f"D_y={d_y:.3g} is not positive")


def objective(w: WeightVector, a: RatioMatrix, d_x_floor: float = 1e-4, epsilon_floor: float = 1e-12) -> float:
    """ln(D_y) - ln(D_x); exp of the value is the candidate ratio."""
    d_x, d_y, _ = _divergences(w.w, a, epsilon_floor)
    _check_feasible(d_x, d_y, d_x_floor)
    return float(np.log(d_y) - np.log(d_x))


def gradient(w: WeightVector, a: RatioMatrix, d_x_floor: float = 1e-4, epsilon_floor: float = 1e-12) -> np.ndarray:
    n = w.n
    d_x, d_y, v = _divergences(w.w, a, epsilon_floor)
    _check_feasible(d_x, d_y, d_x_floor)
    grad_y = a.a.T @ (np.log(v) + 1.0) / (n * n)
    with np.errstate(divide="ignore"):
        grad_x = (np.log(w.w) + 1.0) / n
    return grad_y / d_y - grad_x / d_x


def project(w_raw, w_min: float = W_MIN, w_max: float = W_MAX) -> WeightVector:
    """
    Euclidean projection onto {w : w_min <= w_i <= w_max, mean(w) = 1}.

    The projection is clip(w_raw - tau) for the unique shift tau making the mean
    one. tau is bracketed with brentq and then solved exactly on the free set.
    """
    y = np.asarray(w_raw, dtype=np.float64).ravel()
    n = y.size
    target = float(n)

    def excess(tau: float) -> float:
        return float(np.clip(y - tau, w_min, w_max).sum()) - target

    lo, hi = float(y.min()) - w_max, float(y.max()) - w_min
    if excess(0.0) == 0.0:
        tau = 0.0
    else:
        tau = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)

    shifted = y - tau
    at_min = shifted <= w_min
    at_max = shifted >= w_max
    free = ~(at_min | at_max)
    if free.any():
        budget = target - w_min * at_min.sum() - w_max * at_max.sum()
        tau = (y[free].sum() - budget) / free.sum()
    w = np.clip(y - tau, w_min, w_max)
    return WeightVector(w)


def kkt_residual(w: WeightVector, a: RatioMatrix, d_x_floor: float = 1e-4, epsilon_floor: float = 1e-12) -> float:
    """max_i |project(w + grad)_i - w_i|; zero at a stationary point of the constrained problem."""
    g = gradient(w, a, d_x_floor, epsilon_floor)
    return float(np.max(np.abs(project(w.w + g).w - w.w)))


def _init_weights(n: int, sigma2: float, seed: int) -> WeightVector:
    rng = np.random.default_rng(seed)
    return project(1.0 + rng.normal(0.0, np.sqrt(sigma2), size=n))


def _ascend(a: RatioMatrix, opt: OptimizerConfig, seed: int) -> Optional[Tuple[float, WeightVector, bool]]:
    """
    One restart. Returns (objective, weights, converged), or None if the start
    has D_x below the floor.

    A start with D_y == 0 (every output ratio is one, as for an exactly
    independent A) scores -inf, i.e. a ratio of zero, and is not ascended.
    """
    n = a.n
    w = _init_weights(n, opt.init_noise_sigma2, seed)
    d_x, d_y, _ = _divergences(w.w, a, opt.epsilon_floor)
    if not d_x >= opt.d_x_floor:
        logger.debug(f"restart seed={seed} infeasible at init: D_x={d_x:.3g}")
        return None
    if not d_y > 0:
        logger.debug(f"restart seed={seed}: D_y={d_y:.3g} at init, ratio is zero")
        return -np.inf, w, True
    f = float(np.log(d_y) - np.log(d_x))

    step = opt.step_size
    stall = 0
    converged = False
    for it in range(opt.max_iters):
        g = gradient(w, a, opt.d_x_floor, opt.epsilon_floor)
        residual = float(np.max(np.abs(project(w.w + g).w - w.w)))
        if residual <= opt.kkt_tol:
            converged = True
            break

        direction = n * g
        accepted = False
        for _ in range(MAX_HALVINGS):
            candidate = project(w.w + step * direction)
            try:
                f_new = objective(candidate, a, opt.d_x_floor, opt.epsilon_floor)
            except InfeasiblePoint:
                f_new = -np.inf
            if f_new > f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = residual <= KKT_ACCEPT
            break

        improvement = (f_new - f) / max(abs(f), 1e-12)
        w, f = candidate, f_new
        step = min(2.0 * step, MAX_STEP_GROWTH * opt.step_size)
        stall = stall + 1 if improvement < opt.tol else 0
        if stall >= STALL_ITERS and residual <= KKT_ACCEPT:
            converged = True
            break

    logger.debug(f"restart seed={seed}: objective={f:.6g}, iters={it + 1}, converged={converged}")
    return f, w, converged


def restart_seeds(seed: int, restarts: int) -> List[int]:
    # child i depends only on (seed, i), so a longer restart list extends a shorter one
    return [utils.derive_seed(seed, i) for i in range(restarts)]


def maximize_ratio(a: RatioMatrix, opt: Optional[OptimizerConfig] = None, threads: int = 1) -> Tuple[EstimateResult, WeightVector]:
    opt = opt or OptimizerConfig()
    seeds = restart_seeds(opt.seed, opt.restarts)

    if threads > 1:
        runs = Parallel(n_jobs=threads, prefer="threads")(delayed(_ascend)(a, opt, s) for s in seeds)
    else:
        runs = [_ascend(a, opt, s) for s in seeds]

    feasible = [r for r in runs if r is not None]
    if not feasible:
        raise OptimizationFailed("every restart was infeasible at initialization", seed=opt.seed)

    # first best wins ties, independent of scheduling
    best_f, best_w, best_converged = max(feasible, key=lambda r: r[0])
    result = EstimateResult.from_raw(
        float(np.exp(best_f)),
        restarts_used=len(feasible),
        best_objective=best_f,
        converged=best_converged,
        seed=opt.seed,
    )
    return result, best_w


def estimate_hc(s: PairedSamples, kde: Optional[KdeConfig] = None, opt: Optional[OptimizerConfig] = None, threads: int = 1) -> EstimateResult:
    kde = kde or KdeConfig()
    opt = opt or OptimizerConfig()
    s.require_nonconstant()
    a = estimate_ratio_matrix(s, kde)
    try:
        result, _ = maximize_ratio(a, opt, threads)
    except OptimizationFailed:
        logger.error(f"optimization failed: {traceback.format_exc()}")
        raise
    logger.info(f"s(X;Y) estimate={result.value:.4f} (raw={result.raw_value:.4f}, n={s.n}, restarts={result.restarts_used}, seed={opt.seed})")
    return result


def estimate_hc_reverse(s: PairedSamples, kde: Optional[KdeConfig] = None, opt: Optional[OptimizerConfig] = None, threads: int = 1) -> EstimateResult:
    """s(Y;X): the estimator on the swapped pair."""
    return estimate_hc(s.swap(), kde, opt, threads)
