"""Pairwise screening and outlier remove-and-rescore."""

import os
import numpy as np
import pandas as pd
import pytest

from hyperco.baselines import MIC_LABEL
from hyperco.cli_io import Table, load_csv, table_from_frame
from hyperco.core_types import DomainError, PairedSamples, SchemaError
from hyperco.hc_estimator import OptimizerConfig
from hyperco.power_harness import ScoringConfig, score_dataset
from hyperco.screening import ScreenReport, ScreenRow, screen_pairs, remove_and_rescore
from tests.config import SEED, FIXTURES, FAST_RESTARTS

QUICK_SCORING = ScoringConfig(optimizer=OptimizerConfig(restarts=FAST_RESTARTS, max_iters=200))
CHEAP = ("pearson", "dcor", "mcor", "mic")


def _table(**columns) -> Table:
    return table_from_frame(pd.DataFrame(columns))


def _row(report: ScreenReport, x: str, y: str) -> ScreenRow:
    return next(r for r in report.rows if r.x == x and r.y == y)


class TestScreenPairs:
    def test_ordered_pairs(self):
        rng = np.random.default_rng(SEED)
        t = _table(a=rng.uniform(size=50), b=rng.uniform(size=50), c=rng.uniform(size=50))
        report = screen_pairs(t, ["pearson"], min_complete=10, seed=SEED)
        assert len(report.rows) == 6
        assert {(r.x, r.y) for r in report.rows} == {(x, y) for x in "abc" for y in "abc" if x != y}

    def test_sparse_pair_is_skipped(self):
        rng = np.random.default_rng(SEED)
        sparse = rng.uniform(size=60)
        sparse[10:] = np.nan
        t = _table(a=rng.uniform(size=60), b=rng.uniform(size=60), sparse=sparse)
        report = screen_pairs(t, ["pearson"], min_complete=30, seed=SEED)
        skipped = [r for r in report.rows if r.skipped]
        assert len(report.rows) == 6
        assert len(skipped) == 4
        assert all(r.n_complete == 10 and r.pearson is None for r in skipped)
        assert not _row(report, "a", "b").skipped

    def test_missing_cells_use_complete_rows(self):
        t = load_csv(os.path.join(FIXTURES, "who_mixture.csv"))
        report = screen_pairs(t, ["pearson"], min_complete=30, seed=SEED)
        assert _row(report, "indicator_x", "indicator_y").n_complete == 146
        assert _row(report, "indicator_x", "noise").n_complete == 146 - 13

    def test_self_pair(self):
        x = np.random.default_rng(SEED).uniform(size=300)
        report = screen_pairs(_table(a=x, a_copy=x.copy()), seed=SEED, configs=QUICK_SCORING)
        row = _row(report, "a", "a_copy")
        for measure in CHEAP:
            assert getattr(row, measure) >= 0.9
        assert row.hc >= 0.7

    def test_independent_columns_stay_below_null_quantile(self):
        n, reps = 60, 100
        rng = np.random.default_rng(SEED)
        null = {m: [] for m in CHEAP}
        for _ in range(200):
            scores = score_dataset(PairedSamples(rng.uniform(size=n), rng.uniform(size=n)), CHEAP)
            for m in CHEAP:
                null[m].append(scores[m])
        cutoffs = {m: np.quantile(null[m], 0.95) for m in CHEAP}

        below = {m: 0 for m in CHEAP}
        for rep in range(reps):
            rng_rep = np.random.default_rng(SEED + 1 + rep)
            t = _table(u=rng_rep.uniform(size=n), v=rng_rep.uniform(size=n))
            row = _row(screen_pairs(t, CHEAP, min_complete=10, seed=rep), "u", "v")
            for m in CHEAP:
                below[m] += abs(getattr(row, m)) <= cutoffs[m]
        for m in CHEAP:
            assert below[m] / reps >= 0.9, m

    def test_rare_linear_mixture_fixture(self):
        t = load_csv(os.path.join(FIXTURES, "who_mixture.csv"))
        row = _row(screen_pairs(t, ["hc", "pearson", "mic"], seed=SEED), "indicator_x", "indicator_y")
        assert row.hc >= 0.3
        assert row.pearson <= 0.2
        assert row.mic <= 0.3
        assert row.hc > abs(row.pearson)

    def test_threads_do_not_change_scores(self):
        rng = np.random.default_rng(SEED)
        t = _table(a=rng.uniform(size=80), b=rng.uniform(size=80), c=rng.uniform(size=80))
        serial = screen_pairs(t, CHEAP, min_complete=10, seed=SEED)
        threaded = screen_pairs(t, CHEAP, min_complete=10, seed=SEED, threads=2)
        assert serial == threaded

    def test_needs_two_columns(self):
        with pytest.raises(DomainError):
            screen_pairs(_table(a=np.arange(40.0)), ["pearson"])

    def test_unknown_measure(self):
        t = _table(a=np.arange(40.0), b=np.arange(40.0))
        with pytest.raises(DomainError):
            screen_pairs(t, ["kendall"])


class TestScreenReport:
    def _report(self):
        return ScreenReport(rows=(
            ScreenRow(x="a", y="b", n_complete=50, pearson=0.2),
            ScreenRow(x="b", y="a", n_complete=5, skipped=True),
            ScreenRow(x="a", y="c", n_complete=50, pearson=0.7),
        ))

    def test_sorted_by_puts_missing_last(self):
        ordered = self._report().sorted_by("pearson")
        assert [(r.x, r.y) for r in ordered] == [("a", "c"), ("a", "b"), ("b", "a")]
        ascending = self._report().sorted_by("pearson", descending=False)
        assert ascending[0].pearson == 0.2 and ascending[-1].skipped

    def test_sorted_by_unknown_column(self):
        with pytest.raises(DomainError):
            self._report().sorted_by("spearman")

    def test_frame(self):
        frame = self._report().to_frame()
        assert list(frame.columns)[:5] == ["x", "y", "n_complete", "dropped", "skipped"]
        assert len(frame) == 3
        assert frame["skipped"].tolist() == [False, True, False]
        assert MIC_LABEL in frame.columns and "mic" not in frame.columns


class TestRemoveAndRescore:
    def _bulk(self, outlier):
        rng = np.random.default_rng(SEED)
        x = np.append(rng.uniform(size=300), outlier[0])
        y = np.append(rng.uniform(size=300), outlier[1])
        return _table(x=x, y=y)

    def test_no_drop_matches_screen(self):
        t = self._bulk((0.5, 0.5))
        trajectory = remove_and_rescore(t, ("x", "y"), 0, CHEAP, seed=SEED)
        screened = _row(screen_pairs(t, CHEAP, seed=SEED), "x", "y")
        assert len(trajectory) == 1
        assert trajectory[0] == screened

    def test_far_outlier_drives_hc(self):
        t = self._bulk((10.0, 10.0))
        trajectory = remove_and_rescore(t, ("x", "y"), 1, ["hc"], seed=SEED, configs=QUICK_SCORING)
        assert [r.dropped for r in trajectory] == [0, 1]
        assert trajectory[0].hc > 0.8
        assert trajectory[1].hc < 0.2
        assert trajectory[1].n_complete == 300

    def test_near_outlier_leaves_trajectory_flat(self):
        t = self._bulk((1.02, 1.02))
        trajectory = remove_and_rescore(t, ("x", "y"), 1, ["hc"], seed=SEED, configs=QUICK_SCORING)
        assert abs(trajectory[0].hc - trajectory[1].hc) < 0.1

    def test_drop_count_checked(self):
        t = self._bulk((0.5, 0.5))
        with pytest.raises(DomainError):
            remove_and_rescore(t, ("x", "y"), 301, ["pearson"])
        with pytest.raises(DomainError):
            remove_and_rescore(t, ("x", "y"), -1, ["pearson"])

    def test_unknown_column(self):
        with pytest.raises(SchemaError):
            remove_and_rescore(self._bulk((0.5, 0.5)), ("x", "z"), 1, ["pearson"])
