"""
Power of each dependence measure in the rare/dominant mixture test, and the
pathway trend-recovery experiment.

Every dataset, restart and subsample is seeded through utils.derive_seed from
(config seed, sweep point, role, trial), so reports are bit-identical for a
fixed configuration regardless of how trials are scheduled.
"""

import logging
import sys
import numpy as np
import pandas as pd

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator

import hyperco.utils as utils
from hyperco.core_types import PairedSamples, HypercoError, DomainError, ParseError, SchemaError
from hyperco.density import KdeConfig
from hyperco.hc_estimator import OptimizerConfig, estimate_hc, estimate_hc_reverse
from hyperco.baselines import BaselineConfig, MIC_LABEL, pearson, dcor, mcor, mic
from hyperco.synth import MixtureSpec, generate

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("power_harness")

ALL_MEASURES = ("hc", "hc_reverse", "pearson", "dcor", "mcor", "mic")
PATHWAY_COLUMNS = ("a", "b", "c", "d")
NULL, ALT = 0, 1


def measure_label(measure: str) -> str:
    """Name a measure carries in emitted reports; mic is our approximation, not exact MIC."""
    return MIC_LABEL if measure == "mic" else measure


class ScoringConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kde: KdeConfig = KdeConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    baseline: BaselineConfig = BaselineConfig()

    @classmethod
    def from_config(cls, cfg: Optional[Dict] = None) -> "ScoringConfig":
        cfg = cfg if cfg is not None else utils.config
        return cls(
            kde=KdeConfig(**cfg.get("kde", {})),
            optimizer=OptimizerConfig(**cfg.get("optimizer", {})),
            baseline=BaselineConfig(**cfg.get("baseline", {})),
        )


def check_measures(measures: Sequence[str]) -> List[str]:
    unknown = [m for m in measures if m not in ALL_MEASURES]
    if unknown:
        raise DomainError(f"unknown measures {unknown}; choose from {list(ALL_MEASURES)}")
    return list(measures)


def score_dataset(samples: PairedSamples, measures: Sequence[str], configs: Optional[ScoringConfig] = None, seed: int = 0) -> Dict[str, float]:
    """
    Score one dataset with each requested measure. Pearson is reported as |r|
    so that every score is a detection statistic in [0, 1]. A measure that
    raises scores -inf.
    """
    configs = configs or ScoringConfig()
    opt = configs.optimizer.model_copy(update={"seed": seed})
    scorers = {
        "hc": lambda s: estimate_hc(s, configs.kde, opt).value,
        "hc_reverse": lambda s: estimate_hc_reverse(s, configs.kde, opt).value,
        "pearson": lambda s: abs(pearson(s)),
        "dcor": dcor,
        "mcor": lambda s: mcor(s, configs.baseline),
        "mic": lambda s: mic(s, configs.baseline),
    }

    scores = {}
    for measure in check_measures(measures):
        try:
            scores[measure] = float(scorers[measure](samples))
        except HypercoError as e:
            logger.warning(f"{measure} failed (seed={seed}): {e}")
            scores[measure] = float("-inf")
    return scores


######################################
# Power
######################################
class PowerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_null: int = Field(default=500, ge=20)
    n_alt: int = Field(default=500, ge=1)
    fpr: float = Field(default=0.05, gt=0, lt=1)
    measures: Tuple[str, ...] = ALL_MEASURES
    sweep: Tuple[MixtureSpec, ...] = (MixtureSpec(),)
    sweep_param: Literal["sigma2", "alpha", "n"] = "sigma2"
    seed: int = 0
    trials_parallel: bool = False
    scoring: ScoringConfig = ScoringConfig()

    @field_validator("measures")
    @classmethod
    def validate_measures(cls, value):
        return tuple(check_measures(value))

    @field_validator("sweep")
    @classmethod
    def validate_sweep(cls, value):
        if len(value) == 0:
            raise ValueError("sweep needs at least one point")
        return value

    @classmethod
    def from_sweep(cls, base: MixtureSpec, param: str, values: Sequence[float], **kwargs) -> "PowerConfig":
        cast = int if param == "n" else float
        sweep = tuple(MixtureSpec(**{**base.model_dump(), param: cast(v)}) for v in values)
        return cls(sweep=sweep, sweep_param=param, **kwargs)


class PowerRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    measure: str
    sweep_param: str
    sweep_value: float
    threshold: float
    power: float = Field(ge=0, le=1)
    null_scores: Tuple[float, ...]
    alt_scores: Tuple[float, ...]
    failed_null: int
    failed_alt: int

    def quantiles(self, which: str) -> Tuple[float, float, float]:
        scores = np.asarray(self.null_scores if which == "null" else self.alt_scores)
        finite = scores[np.isfinite(scores)]
        if finite.size == 0:
            return (float("nan"),) * 3
        return tuple(float(q) for q in np.quantile(finite, [0.05, 0.5, 0.95]))


class PowerReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: PowerConfig
    rows: Tuple[PowerRow, ...]

    def power(self, measure: str, point: int = 0) -> float:
        return [r for r in self.rows if r.measure == measure][point].power

    def to_frame(self) -> pd.DataFrame:
        records = []
        for r in self.rows:
            null_q = r.quantiles("null")
            alt_q = r.quantiles("alt")
            records.append({
                "measure": measure_label(r.measure),
                "sweep_param": r.sweep_param,
                "sweep_value": r.sweep_value,
                "threshold": r.threshold,
                "power": r.power,
                "null_q05": null_q[0], "null_q50": null_q[1], "null_q95": null_q[2],
                "alt_q05": alt_q[0], "alt_q50": alt_q[1], "alt_q95": alt_q[2],
                "failed_null": r.failed_null,
                "failed_alt": r.failed_alt,
            })
        return pd.DataFrame(records)

    def metadata(self) -> Dict:
        return {"kind": "power", "config": self.config.model_dump(mode="json")}


def threshold_at(null_scores, fpr: float) -> float:
    """The ceil((1 - fpr) * n_null)-th order statistic of the null scores."""
    ordered = np.sort(np.asarray(null_scores, dtype=np.float64))
    k = int(np.ceil((1.0 - fpr) * ordered.size - 1e-9))
    return float(ordered[max(k, 1) - 1])


def _score_trial(spec: MixtureSpec, measures: Sequence[str], scoring: ScoringConfig) -> Dict[str, float]:
    return score_dataset(generate(spec), measures, scoring, seed=spec.seed)


def _run_batch(specs: List[MixtureSpec], cfg: PowerConfig, threads: int) -> List[Dict[str, float]]:
    if cfg.trials_parallel and threads > 1:
        return Parallel(n_jobs=threads)(delayed(_score_trial)(s, cfg.measures, cfg.scoring) for s in specs)
    return [_score_trial(s, cfg.measures, cfg.scoring) for s in specs]


def run_power(cfg: PowerConfig, threads: int = 1) -> PowerReport:
    rows = []
    for idx, point in enumerate(cfg.sweep):
        null_specs = [point.model_copy(update={"correlated": False, "seed": utils.derive_seed(cfg.seed, idx, NULL, t)}) for t in range(cfg.n_null)]
        alt_specs = [point.model_copy(update={"correlated": True, "seed": utils.derive_seed(cfg.seed, idx, ALT, t)}) for t in range(cfg.n_alt)]
        null_runs = _run_batch(null_specs, cfg, threads)
        alt_runs = _run_batch(alt_specs, cfg, threads)

        sweep_value = float(getattr(point, cfg.sweep_param))
        for measure in cfg.measures:
            null_scores = np.array([r[measure] for r in null_runs])
            alt_scores = np.array([r[measure] for r in alt_runs])
            threshold = threshold_at(null_scores, cfg.fpr)
            # ties at the threshold are non-detections
            power = float(np.mean(alt_scores > threshold))
            rows.append(PowerRow(
                measure=measure,
                sweep_param=cfg.sweep_param,
                sweep_value=sweep_value,
                threshold=threshold,
                power=power,
                null_scores=tuple(null_scores.tolist()),
                alt_scores=tuple(alt_scores.tolist()),
                failed_null=int(np.sum(~np.isfinite(null_scores))),
                failed_alt=int(np.sum(~np.isfinite(alt_scores))),
            ))
            logger.info(f"power: {measure} {cfg.sweep_param}={sweep_value:g} threshold={threshold:.4f} power={power:.3f}")
    return PowerReport(config=cfg, rows=tuple(rows))


######################################
# Pathway trend recovery
######################################
@dataclass(frozen=True)
class PathwaySeries:
    """Per timepoint an (n_i, 4) array of the chain variables A, B, C, D."""
    timepoints: Tuple[float, ...]
    samples: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.timepoints) < 2:
            raise DomainError(f"need at least 2 timepoints, got {len(self.timepoints)}")
        if len(self.timepoints) != len(self.samples):
            raise DomainError("one sample block per timepoint is required")
        blocks = []
        for t, block in zip(self.timepoints, self.samples):
            block = np.asarray(block, dtype=np.float64)
            if block.ndim != 2 or block.shape[1] != 4:
                raise DomainError(f"timepoint {t}: expected 4 aligned columns, got shape {block.shape}")
            if block.shape[0] < 2:
                raise DomainError(f"timepoint {t}: need at least 2 samples")
            blocks.append(block)
        object.__setattr__(self, "timepoints", tuple(float(t) for t in self.timepoints))
        object.__setattr__(self, "samples", tuple(blocks))

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for t, block in zip(self.timepoints, self.samples):
            frame = pd.DataFrame(block, columns=list(PATHWAY_COLUMNS))
            frame.insert(0, "time", t)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def argmax_time(scores: Sequence[Tuple[float, float]]) -> float:
    """Time of the largest score; ties go to the earliest time."""
    if len(scores) == 0:
        raise DomainError("argmax_time needs at least one score")
    ordered = sorted(scores, key=lambda ts: ts[0])
    best_t, best = ordered[0]
    for t, value in ordered[1:]:
        if value > best:
            best_t, best = t, value
    return float(best_t)


def _pathway_trial(series: PathwaySeries, measure: str, rate: float, configs: ScoringConfig, seed: int, trial: int) -> bool:
    rng = np.random.default_rng(utils.derive_seed(seed, trial))
    per_pair = [[], [], []]
    for i, (t, block) in enumerate(zip(series.timepoints, series.samples)):
        m = int(np.ceil(rate * block.shape[0] - 1e-9))
        sub = block[rng.choice(block.shape[0], size=m, replace=False)]
        for p in range(3):
            try:
                samples = PairedSamples(sub[:, p], sub[:, p + 1])
                score = score_dataset(samples, [measure], configs, seed=utils.derive_seed(seed, trial, i, p))[measure]
            except HypercoError as e:
                logger.warning(f"pathway trial {trial}, t={t}, pair {p}: {e}")
                score = float("-inf")
            per_pair[p].append((t, score))
    peaks = [argmax_time(s) for s in per_pair]
    return peaks[0] <= peaks[1] <= peaks[2]


def trend_recovery(series: PathwaySeries, measure: str, subsample_rate: float, trials: int = 20, seed: int = 0,
                   configs: Optional[ScoringConfig] = None, threads: int = 1) -> float:
    """Fraction of subsampled trials whose three peak times are nondecreasing along the chain."""
    check_measures([measure])
    if not (0 < subsample_rate <= 1):
        raise DomainError(f"subsample_rate must be in (0, 1], got {subsample_rate}")
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    configs = configs or ScoringConfig()

    if threads > 1:
        wins = Parallel(n_jobs=threads)(delayed(_pathway_trial)(series, measure, subsample_rate, configs, seed, k) for k in range(trials))
    else:
        wins = [_pathway_trial(series, measure, subsample_rate, configs, seed, k) for k in range(trials)]
    success = float(np.mean(wins))
    logger.info(f"trend recovery: {measure} rate={subsample_rate:g} success={success:.3f} over {trials} trials")
    return success


def pathway_sweep(series: PathwaySeries, measures: Sequence[str], rates: Sequence[float], trials: int = 20, seed: int = 0,
                  configs: Optional[ScoringConfig] = None, threads: int = 1) -> pd.DataFrame:
    rows = []
    for measure in check_measures(measures):
        for rate in rates:
            rows.append({
                "measure": measure_label(measure),
                "subsample_rate": float(rate),
                "success": trend_recovery(series, measure, rate, trials, seed, configs, threads),
            })
    return pd.DataFrame(rows)


def planted_chain(timepoints: Sequence[float] = (0, 1, 2, 3, 4), peaks: Sequence[float] = (1, 2, 3), n: int = 400,
                  alpha: float = 0.6, seed: int = 0) -> PathwaySeries:
    """
    Chain A -> B -> C -> D with uniform marginals. At the peak time of a link the
    downstream variable is the rescaled upstream one on the rare region
    {upstream < alpha} and independent elsewhere; away from the peak the link is
    independent.
    """
    if len(peaks) != 3:
        raise DomainError(f"need one peak time per link (3), got {len(peaks)}")
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    blocks = []
    for i, t in enumerate(timepoints):
        rng = np.random.default_rng(utils.derive_seed(seed, i))
        cols = [rng.uniform(0.0, 1.0, size=n)]
        for p in range(3):
            upstream = cols[-1]
            nxt = rng.uniform(0.0, 1.0, size=n)
            if float(t) == float(peaks[p]):
                rare = upstream < alpha
                nxt[rare] = upstream[rare] / alpha
            cols.append(nxt)
        blocks.append(np.column_stack(cols))
    return PathwaySeries(tuple(float(t) for t in timepoints), tuple(blocks))


def load_pathway_csv(path: str) -> PathwaySeries:
    """Long CSV with columns time,a,b,c,d; one row per cell measurement."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.ParserError as e:
        raise SchemaError(f"malformed pathway CSV {path}: {e}")
    missing = [c for c in ("time",) + PATHWAY_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"pathway CSV {path} lacks columns {missing}")
    for column in ("time",) + PATHWAY_COLUMNS:
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = values.isna()
        if bad.any():
            raise ParseError("non-numeric or missing value", row=int(np.flatnonzero(bad.to_numpy())[0]) + 2, column=column)
        frame[column] = values

    times = sorted(frame["time"].unique())
    blocks = tuple(frame.loc[frame["time"] == t, list(PATHWAY_COLUMNS)].to_numpy() for t in times)
    logger.info(f"pathway series from {path}: timepoints={len(times)}, rows={len(frame)}")
    return PathwaySeries(tuple(float(t) for t in times), blocks)
