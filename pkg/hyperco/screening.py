"""
Pairwise screening of a table of indicators.

Every ordered column pair (i -> j) is scored on its pairwise-complete rows; hc is
s(column i; column j) and hc_reverse the opposite direction. Pairs with fewer
than min_complete rows are kept in the report flagged as skipped.
"""

import logging
import sys
import numpy as np
import pandas as pd

from typing import List, Optional, Sequence, Tuple
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

import hyperco.utils as utils
from hyperco.core_types import PairedSamples, DomainError
from hyperco.cli_io import Table
from hyperco.power_harness import ALL_MEASURES, ScoringConfig, score_dataset, check_measures, measure_label

logging.basicConfig(
    level=logging.INFO,  # Default to INFO level
    format='%(filename)s:%(lineno)d | %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)
logger = logging.getLogger("screening")


class ScreenRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: str
    y: str
    n_complete: int
    dropped: int = 0
    skipped: bool = False
    error: Optional[str] = None
    hc: Optional[float] = Field(default=None, ge=0, le=1)
    hc_reverse: Optional[float] = Field(default=None, ge=0, le=1)
    pearson: Optional[float] = None
    dcor: Optional[float] = None
    mcor: Optional[float] = None
    mic: Optional[float] = None


class ScreenReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: Tuple[ScreenRow, ...]

    def sorted_by(self, column: str, descending: bool = True) -> List[ScreenRow]:
        if column not in ScreenRow.model_fields:
            raise DomainError(f"unknown column {column!r}")
        present = [r for r in self.rows if getattr(r, column) is not None]
        absent = [r for r in self.rows if getattr(r, column) is None]
        return sorted(present, key=lambda r: getattr(r, column), reverse=descending) + absent

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([r.model_dump() for r in self.rows], columns=list(ScreenRow.model_fields))
        return frame.rename(columns={m: measure_label(m) for m in ALL_MEASURES})


def pair_seed(seed: int, i: int, j: int) -> int:
    return utils.derive_seed(seed, i, j)


def _score_row(samples: PairedSamples, x: str, y: str, measures: Sequence[str], configs: ScoringConfig, seed: int, dropped: int = 0) -> ScreenRow:
    scores = score_dataset(samples, measures, configs, seed=seed)
    failed = [m for m, v in scores.items() if not np.isfinite(v)]
    values = {m: v for m, v in scores.items() if np.isfinite(v)}
    return ScreenRow(
        x=x, y=y, n_complete=samples.n, dropped=dropped,
        error=f"failed: {','.join(failed)}" if failed else None,
        **values,
    )


def _screen_pair(t: Table, i: int, j: int, measures: Sequence[str], min_complete: int, configs: ScoringConfig, seed: int) -> ScreenRow:
    x, y = t.columns[i], t.columns[j]
    mask = t.complete_mask(i, j)
    n_complete = int(mask.sum())
    if n_complete < max(min_complete, 2):
        logger.debug(f"skipping {x} -> {y}: {n_complete} complete rows")
        return ScreenRow(x=x, y=y, n_complete=n_complete, skipped=True)
    try:
        samples = PairedSamples(t.cells[mask, i], t.cells[mask, j])
    except DomainError as e:
        logger.warning(f"{x} -> {y}: {e}")
        return ScreenRow(x=x, y=y, n_complete=n_complete, error=str(e))
    return _score_row(samples, x, y, measures, configs, pair_seed(seed, i, j))


def screen_pairs(t: Table, measures: Sequence[str] = ALL_MEASURES, min_complete: int = 30, seed: int = 0,
                 configs: Optional[ScoringConfig] = None, threads: int = 1) -> ScreenReport:
    measures = check_measures(measures)
    configs = configs or ScoringConfig()
    if t.n_cols < 2:
        raise DomainError(f"screening needs at least 2 columns, got {t.n_cols}")
    pairs = [(i, j) for i in range(t.n_cols) for j in range(t.n_cols) if i != j]

    if threads > 1:
        rows = Parallel(n_jobs=threads)(delayed(_screen_pair)(t, i, j, measures, min_complete, configs, seed) for i, j in pairs)
    else:
        rows = [_screen_pair(t, i, j, measures, min_complete, configs, seed) for i, j in pairs]

    skipped = sum(r.skipped for r in rows)
    logger.info(f"screened {len(pairs)} ordered pairs ({skipped} skipped), measures={measures}")
    return ScreenReport(rows=tuple(rows))


def _most_extreme(samples: PairedSamples) -> int:
    """Index of the sample farthest from the coordinate-wise median in standardized units."""
    z = []
    for v in (samples.x, samples.y):
        scale = np.std(v, ddof=1)
        z.append((v - np.median(v)) / (scale if scale > 0 else 1.0))
    return int(np.argmax(np.hypot(z[0], z[1])))


def remove_and_rescore(t: Table, pair: Tuple[str, str], drop_extreme: int, measures: Sequence[str] = ALL_MEASURES,
                       seed: int = 0, configs: Optional[ScoringConfig] = None) -> List[ScreenRow]:
    """Score trajectory while the most extreme sample is removed one at a time."""
    measures = check_measures(measures)
    configs = configs or ScoringConfig()
    i, j = t.index(pair[0]), t.index(pair[1])
    mask = t.complete_mask(i, j)
    samples = PairedSamples(t.cells[mask, i], t.cells[mask, j])
    if not (0 <= drop_extreme < samples.n):
        raise DomainError(f"drop_extreme must be in [0, {samples.n}), got {drop_extreme}")

    s = pair_seed(seed, i, j)
    trajectory = [_score_row(samples, pair[0], pair[1], measures, configs, s)]
    for k in range(1, drop_extreme + 1):
        idx = _most_extreme(samples)
        logger.info(f"dropping sample ({samples.x[idx]:.4g}, {samples.y[idx]:.4g}) from {pair[0]} -> {pair[1]}")
        samples = samples.subset(np.delete(np.arange(samples.n), idx))
        trajectory.append(_score_row(samples, pair[0], pair[1], measures, configs, s, dropped=k))
    return trajectory
