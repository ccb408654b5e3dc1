"""Power evaluation and pathway trend recovery."""

import numpy as np
import pytest

from pydantic import ValidationError

from hyperco.baselines import MIC_LABEL
from hyperco.core_types import DomainError, PairedSamples, SchemaError
from hyperco.hc_estimator import OptimizerConfig
from hyperco.power_harness import (
    PowerConfig, ScoringConfig, PathwaySeries, run_power, threshold_at, score_dataset,
    trend_recovery, argmax_time, planted_chain, load_pathway_csv, pathway_sweep,
    measure_label,
)
from hyperco.synth import FunctionFamily, MixtureSpec, generate
from tests.config import SEED, POWER_TRIALS, POWER_TRIALS_QUICK, PATHWAY_TRIALS, FAST_RESTARTS

QUICK_SCORING = ScoringConfig(optimizer=OptimizerConfig(restarts=FAST_RESTARTS, max_iters=200))


class TestThreshold:
    def test_order_statistic(self):
        scores = np.arange(100, dtype=float)[::-1]
        # ceil(0.95 * 100) = 95th smallest
        assert threshold_at(scores, 0.05) == 94.0
        assert threshold_at(np.arange(20, dtype=float), 0.1) == 17.0

    def test_failed_trials_sort_first(self):
        scores = np.array([-np.inf] * 5 + list(range(15)), dtype=float)
        assert threshold_at(scores, 0.5) == 4.0


class TestScoreDataset:
    def test_all_measures(self):
        x = np.random.default_rng(SEED).uniform(size=100)
        scores = score_dataset(PairedSamples(x, x), ["pearson", "dcor", "mcor", "mic"], seed=SEED)
        assert set(scores) == {"pearson", "dcor", "mcor", "mic"}
        assert scores["pearson"] == pytest.approx(1.0)

    def test_failure_scores_negative_infinity(self):
        x = np.random.default_rng(SEED).uniform(size=10)
        assert score_dataset(PairedSamples(x, x), ["mic"])["mic"] == float("-inf")

    def test_unknown_measure(self):
        x = np.arange(10.0)
        with pytest.raises(DomainError):
            score_dataset(PairedSamples(x, x), ["spearman"])


class TestPowerConfig:
    def test_invariants(self):
        with pytest.raises(ValidationError):
            PowerConfig(n_null=10)
        with pytest.raises(ValidationError):
            PowerConfig(fpr=1.0)
        with pytest.raises(ValidationError):
            PowerConfig(measures=("hc", "kendall"))

    def test_from_sweep(self):
        cfg = PowerConfig.from_sweep(MixtureSpec(), "sigma2", [0.0, 0.1, 0.3])
        assert [s.sigma2 for s in cfg.sweep] == [0.0, 0.1, 0.3]
        assert cfg.sweep_param == "sigma2"
        with pytest.raises(ValidationError):
            PowerConfig.from_sweep(MixtureSpec(), "alpha", [1.5])


class TestRunPower:
    def _config(self, **kwargs):
        base = dict(n_null=POWER_TRIALS_QUICK, n_alt=POWER_TRIALS_QUICK, measures=("pearson", "dcor"),
                    sweep=(MixtureSpec(family=FunctionFamily.linear, alpha=0.5, sigma2=0.01, n=200),), seed=SEED)
        base.update(kwargs)
        return PowerConfig(**base)

    def test_power_matches_threshold_rule(self):
        report = run_power(self._config())
        for row in report.rows:
            assert row.threshold == threshold_at(row.null_scores, 0.05)
            assert row.power == pytest.approx(np.mean(np.array(row.alt_scores) > row.threshold))

    def test_reproducible(self):
        first = run_power(self._config())
        second = run_power(self._config())
        assert first == second
        assert first.to_frame().to_csv(index=False) == second.to_frame().to_csv(index=False)

    def test_parallel_trials_match_serial(self):
        serial = run_power(self._config())
        parallel = run_power(self._config(trials_parallel=True), threads=2)
        assert [r.power for r in serial.rows] == [r.power for r in parallel.rows]

    def test_strong_alternative_is_detected(self):
        report = run_power(self._config())
        assert report.power("pearson") > 0.8

    def test_second_null_batch_rejects_at_fpr(self):
        cfg = self._config(n_null=1000, n_alt=1, measures=("pearson",))
        threshold = run_power(cfg).rows[0].threshold
        point = cfg.sweep[0]
        fresh = []
        for t in range(1000):
            spec = point.model_copy(update={"correlated": False, "seed": SEED + 10_000 + t})
            fresh.append(score_dataset(generate(spec), ["pearson"])["pearson"])
        assert np.mean(np.array(fresh) > threshold) == pytest.approx(0.05, abs=0.03)

    def test_frame_and_metadata(self):
        report = run_power(self._config())
        frame = report.to_frame()
        assert {"measure", "sweep_value", "threshold", "power"} <= set(frame.columns)
        assert len(frame) == 2
        assert report.metadata()["config"]["seed"] == SEED

    def test_pearson_blind_to_fast_sine(self):
        cfg = self._config(measures=("pearson",), n_null=50, n_alt=50,
                           sweep=(MixtureSpec(family=FunctionFamily.sin16pi, alpha=0.05, sigma2=0.1, n=320),))
        assert run_power(cfg).power("pearson") <= 0.15


@pytest.mark.slow
class TestPowerAcceptance:
    def test_step_family(self):
        cfg = PowerConfig(n_null=POWER_TRIALS, n_alt=POWER_TRIALS, measures=("hc", "pearson", "dcor"),
                          sweep=(MixtureSpec(family=FunctionFamily.step, alpha=0.05, sigma2=0.1, n=320),),
                          seed=SEED, scoring=QUICK_SCORING)
        report = run_power(cfg)
        assert report.power("hc") >= report.power("pearson")
        assert report.power("hc") >= report.power("dcor")

    def test_noise_monotone_for_linear(self):
        cfg = PowerConfig.from_sweep(MixtureSpec(family=FunctionFamily.linear, alpha=0.05, n=320), "sigma2", [0.01, 0.1, 1.0],
                                     n_null=POWER_TRIALS, n_alt=POWER_TRIALS, measures=("hc",), seed=SEED, scoring=QUICK_SCORING)
        powers = [r.power for r in run_power(cfg).rows]
        inversions = [b - a for a, b in zip(powers, powers[1:]) if b > a]
        assert len(inversions) <= 1 and all(i <= 0.05 for i in inversions)


class TestArgmaxTime:
    def test_peak(self):
        assert argmax_time([(0, 0.1), (1, 0.9), (2, 0.3)]) == 1

    def test_tie_goes_to_earliest(self):
        assert argmax_time([(1, 0.5), (0, 0.5)]) == 0

    def test_single(self):
        assert argmax_time([(3.5, 0.2)]) == 3.5

    def test_empty(self):
        with pytest.raises(DomainError):
            argmax_time([])


class TestPathway:
    def test_series_invariants(self):
        with pytest.raises(DomainError):
            PathwaySeries((0.0,), (np.zeros((5, 4)),))
        with pytest.raises(DomainError):
            PathwaySeries((0.0, 1.0), (np.zeros((5, 4)), np.zeros((5, 3))))

    def test_planted_order_recovered(self):
        series = planted_chain(n=400, alpha=0.6, seed=SEED)
        for measure in ("pearson", "dcor", "mcor", "mic"):
            assert trend_recovery(series, measure, 1.0, trials=2, seed=SEED) == 1.0

    def test_reversed_order_fails(self):
        series = planted_chain(peaks=(3, 2, 1), n=400, alpha=0.6, seed=SEED)
        assert trend_recovery(series, "pearson", 1.0, trials=2, seed=SEED) == 0.0

    def test_hc_recovers_planted_order(self):
        series = planted_chain(n=200, alpha=0.6, seed=SEED)
        assert trend_recovery(series, "hc", 1.0, trials=1, seed=SEED, configs=QUICK_SCORING) == 1.0

    def test_rate_and_trials_checked(self):
        series = planted_chain(n=50, seed=SEED)
        with pytest.raises(DomainError):
            trend_recovery(series, "pearson", 0.0)
        with pytest.raises(DomainError):
            trend_recovery(series, "pearson", 0.5, trials=0)

    def test_sweep_frame(self):
        series = planted_chain(n=200, seed=SEED)
        frame = pathway_sweep(series, ["pearson"], [0.5, 1.0], trials=3, seed=SEED)
        assert list(frame.columns) == ["measure", "subsample_rate", "success"]
        assert len(frame) == 2

    def test_reports_label_mic(self):
        assert measure_label("mic") == MIC_LABEL
        assert measure_label("dcor") == "dcor"
        series = planted_chain(n=100, seed=SEED)
        frame = pathway_sweep(series, ["mic"], [1.0], trials=2, seed=SEED)
        assert frame["measure"].tolist() == [MIC_LABEL]

    def test_csv_round_trip(self, tmp_path):
        series = planted_chain(n=30, seed=SEED)
        path = tmp_path / "chain.csv"
        series.to_frame().to_csv(path, index=False)
        loaded = load_pathway_csv(str(path))
        assert loaded.timepoints == series.timepoints
        assert np.allclose(loaded.samples[2], series.samples[2])

    def test_csv_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,a,b,c\n0,1,2,3\n")
        with pytest.raises(SchemaError):
            load_pathway_csv(str(path))

    @pytest.mark.slow
    def test_hc_at_low_rate(self):
        series = planted_chain(n=400, alpha=0.6, seed=SEED)
        hc = trend_recovery(series, "hc", 0.1, trials=PATHWAY_TRIALS, seed=SEED, configs=QUICK_SCORING)
        pearson = trend_recovery(series, "pearson", 0.1, trials=PATHWAY_TRIALS, seed=SEED)
        assert hc >= pearson
