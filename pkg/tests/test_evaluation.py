"""Expected-error metrics, confidence scoring, and leave-one-out evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from conftest import random_model
from hetmix import (MODEL_MISSING, DegenerateSampleError, EmConfig,
                    FinitePrediction, TrainingError, VariableSchema,
                    chance_prediction, confidence_bins, confidence_score,
                    error_density, expected_absolute_error, loo_evaluate,
                    max_absolute_error, normalized_error, percentile_rank,
                    percentile_ranks, prediction_error, probability_of_error,
                    sample_cohort, scott_bandwidth, threshold_curve,
                    training_confidence_scores)
from hetmix.demo import small_demo_model
from hetmix.evaluation import _fold_seed
from hetmix.model import evidence_log_likelihoods

EIGHT = VariableSchema("g8", "ordinal", tuple(range(1, 9)))
THREE_WAY = VariableSchema("s3", "categorical", ("a", "b", "c"))


def _uniform(domain):
    k = len(domain)
    return FinitePrediction(domain, np.full(k, 1.0 / k))


class TestPointMetrics:
    def test_expected_absolute_error(self):
        pred = FinitePrediction((1, 2, 3), np.array([0.5, 0.25, 0.25]))
        assert expected_absolute_error(pred, 1) == pytest.approx(0.75)
        assert expected_absolute_error(pred, 3) == pytest.approx(1.25)

    def test_point_mass_is_exact(self):
        pred = FinitePrediction((1, 2, 3), np.array([0.0, 1.0, 0.0]))
        assert expected_absolute_error(pred, 2) == 0.0
        cat = FinitePrediction(("a", "b"), np.array([1.0, 0.0]))
        assert probability_of_error(cat, "a") == 0.0

    def test_chance_ordinal_endpoints(self):
        # uniform over {1..8}: truth 8 gives 3.5, truth 4 gives 2.0
        pred = _uniform(EIGHT.domain)
        assert expected_absolute_error(pred, 8) == pytest.approx(3.5)
        assert expected_absolute_error(pred, 4) == pytest.approx(2.0)
        assert max_absolute_error(EIGHT) == 7.0
        assert normalized_error(EIGHT, 3.5) == pytest.approx(50.0)

    def test_chance_categorical(self):
        pred = _uniform(THREE_WAY.domain)
        assert probability_of_error(pred, "b") == pytest.approx(2.0 / 3.0)
        assert max_absolute_error(THREE_WAY) == 1.0
        assert normalized_error(THREE_WAY, 2.0 / 3.0) == \
            pytest.approx(100.0 * 2 / 3)

    def test_prediction_error_dispatch(self):
        ordinal = VariableSchema("g", "ordinal", (1, 2, 3))
        cat = VariableSchema("s", "categorical", ("a", "b"))
        assert prediction_error(ordinal, _uniform((1, 2, 3)), 3) == \
            pytest.approx(1.0)
        assert prediction_error(cat, _uniform(("a", "b")), "a") == \
            pytest.approx(0.5)
        with pytest.raises(Exception):
            prediction_error(VariableSchema("x", "real"), None, 1.0)

    def test_chance_prediction(self):
        schema = VariableSchema("g", "ordinal", (1, 2, 3))
        pred = chance_prediction(schema)
        assert pred.probabilities.tolist() == [1 / 3, 1 / 3, 1 / 3]

    @given(st.integers(2, 9), st.integers(0, 8), st.data())
    @settings(max_examples=60, deadline=None)
    def test_normalized_error_bounded(self, width, truth_idx, data):
        domain = tuple(range(width))
        schema = VariableSchema("g", "ordinal", domain)
        truth = domain[min(truth_idx, width - 1)]
        raw = data.draw(st.lists(st.floats(0.01, 1.0),
                                 min_size=width, max_size=width))
        probs = np.asarray(raw) / np.sum(raw)
        err = expected_absolute_error(FinitePrediction(domain, probs), truth)
        assert 0.0 <= normalized_error(schema, err) <= 100.0 + 1e-9


class TestPercentiles:
    def test_strict_fraction(self):
        ref = np.array([1.0, 2.0, 3.0, 4.0])
        assert percentile_rank(2.5, ref) == pytest.approx(0.5)
        assert percentile_rank(0.0, ref) == 0.0
        assert percentile_rank(9.0, ref) == 1.0
        assert percentile_rank(2.0, ref) == pytest.approx(0.25)  # ties above

    def test_vectorized_matches_loop(self):
        rng = np.random.default_rng(3)
        ref = rng.normal(size=40)
        queries = np.concatenate([rng.normal(size=15), ref[:5]])  # some ties
        got = percentile_ranks(queries, ref)
        want = [percentile_rank(q, ref) for q in queries]
        assert np.allclose(got, want)

    def test_monotone_in_the_query(self):
        ref = np.array([0.0, 1.0, 1.0, 5.0])
        values = [-1.0, 0.5, 1.0, 2.0, 6.0]
        ranks = [percentile_rank(v, ref) for v in values]
        assert ranks == sorted(ranks)

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            percentile_rank(0.0, np.array([]))


class TestThresholdCurve:
    def test_frozen_two_subject_curve(self):
        percentiles = np.array([0.2, 0.8])
        errors = np.array([10.0, 2.0])
        curve = threshold_curve(percentiles, errors,
                                thresholds=np.array([0.0, 0.5, 0.9]))
        assert curve.mean_error[:2].tolist() == [6.0, 2.0]
        assert math.isnan(curve.mean_error[2])
        assert curve.kept.tolist() == [2, 1, 0]
        assert curve.improvement[1] == pytest.approx(4.0)

    def test_zero_threshold_equals_unconditional_mean(self):
        rng = np.random.default_rng(11)
        percentiles = rng.uniform(size=30)
        errors = rng.uniform(0, 40, size=30)
        curve = threshold_curve(percentiles, errors)
        assert curve.thresholds[0] == 0.0
        assert curve.mean_error[0] == errors.mean()
        assert curve.kept[0] == 30

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            threshold_curve(np.array([0.5]), np.array([1.0, 2.0]))


class TestConfidenceBins:
    def test_split_at_half(self):
        percentiles = np.array([0.1, 0.4, 0.6, 0.9])
        errors = np.array([40.0, 20.0, 10.0, 2.0])
        bins = confidence_bins(percentiles, errors)
        assert bins.low_mean == pytest.approx(30.0)
        assert bins.high_mean == pytest.approx(6.0)
        assert bins.low_count == 2 and bins.high_count == 2

    def test_empty_bin_warns(self):
        with pytest.warns(UserWarning):
            bins = confidence_bins(np.array([0.8, 0.9]), np.array([1.0, 2.0]))
        assert math.isnan(bins.low_mean)
        assert bins.high_mean == pytest.approx(1.5)


class TestDensity:
    def test_scott_bandwidth_frozen(self):
        values = np.arange(100, dtype=float)
        sd = float(np.std(values, ddof=1))
        assert scott_bandwidth(values) == pytest.approx(sd * 100 ** -0.2)
        assert scott_bandwidth(np.array([0.0, 2.0])) == \
            pytest.approx(math.sqrt(2.0) * 2 ** -0.2)

    def test_degenerate_sample(self):
        with pytest.raises(DegenerateSampleError):
            scott_bandwidth(np.array([3.0]))
        with pytest.raises(DegenerateSampleError):
            scott_bandwidth(np.array([2.0, 2.0, 2.0]))

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(5)
        values = rng.normal(10.0, 3.0, size=200)
        h = scott_bandwidth(values)
        grid = np.linspace(values.min() - 6 * h, values.max() + 6 * h, 2001)
        dens = error_density(values, grid)
        assert (dens >= 0).all()
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)


class TestConfidenceScores:
    def test_score_is_log_evidence(self):
        rng = np.random.default_rng(9)
        model = random_model(rng)
        cohort, _ = sample_cohort(model, 5, np.random.default_rng(1))
        scores = training_confidence_scores(model, cohort, MODEL_MISSING)
        for i in range(cohort.n_subjects):
            evidence = {cohort.schemas[j].name: cohort.value(i, j)
                        for j in cohort.input_columns}
            parts = evidence_log_likelihoods(model, evidence, MODEL_MISSING)
            assert scores[i] == pytest.approx(float(logsumexp(parts)),
                                              rel=1e-12)
            assert confidence_score(model, evidence, MODEL_MISSING) == \
                pytest.approx(scores[i], rel=1e-12)

    def test_outcome_columns_excluded(self):
        model = small_demo_model()
        cohort, _ = sample_cohort(model, 6, np.random.default_rng(2))
        assert len(cohort.outcome_columns) > 0
        scores = training_confidence_scores(model, cohort, MODEL_MISSING)
        manual = training_confidence_scores(model, cohort, MODEL_MISSING,
                                            columns=cohort.input_columns)
        assert np.array_equal(scores, manual)
        with_outcomes = training_confidence_scores(
            model, cohort, MODEL_MISSING,
            columns=range(cohort.n_variables))
        assert not np.array_equal(scores, with_outcomes)


class TestFoldSeeds:
    def test_distinct_and_stable(self):
        seeds = {_fold_seed(7, i) for i in range(50)}
        assert len(seeds) == 50
        assert _fold_seed(7, 3) == _fold_seed(7, 3)
        assert _fold_seed(8, 3) != _fold_seed(7, 3)


def _tiny_loo(n=24, orders=(1, 2), workers=1, seed=0, sample_seed=17):
    cohort, _ = sample_cohort(small_demo_model(), n,
                              np.random.default_rng(sample_seed))
    config = EmConfig(max_iterations=60, rel_tol=1e-5, restarts=1, seed=seed)
    return loo_evaluate(cohort, orders, ("severity", "status"), MODEL_MISSING,
                        config, n_workers=workers)


@pytest.fixture(scope="module")
def result():
    return _tiny_loo()


class TestLooEvaluate:

    def test_structure(self, result):
        assert result.orders == (0, 1, 2)
        assert result.targets == ("severity", "status")
        for order in result.orders:
            for target in result.targets:
                summary = result.summary(order, target)
                assert summary.n_subjects > 0
                assert 0.0 <= summary.mean_normalized <= 100.0 + 1e-9
        # every order averages over the same subjects
        for target in result.targets:
            counts = {result.summary(o, target).n_subjects
                      for o in result.orders}
            assert len(counts) == 1

    def test_chance_rows_are_uniform_errors(self, result):
        # order 0 normalized error for a 3-way categorical truth is always
        # 100 * (1 - 1/3) whenever the truth is observed
        records = [r for r in result.eae_records[0] if r.target == "status"]
        assert records
        for record in records:
            assert record.normalized == pytest.approx(100.0 * (1 - 1 / 3))

    def test_confidence_records_have_percentiles(self, result):
        for order in (1, 2):
            records = result.confidence_records[order]
            assert len(records) > 0
            for record in records:
                assert 0.0 <= record.percentile <= 1.0
                assert math.isfinite(record.log_score)

    def test_skipped_subjects_appear_nowhere(self, result):
        for subject, target in result.skipped:
            for order in result.orders:
                present = {(r.subject, r.target)
                           for r in result.eae_records[order]}
                assert (subject, target) not in present

    def test_worker_count_invariance(self):
        a = _tiny_loo(n=12, orders=(1,), workers=1, sample_seed=2)
        b = _tiny_loo(n=12, orders=(1,), workers=2, sample_seed=2)
        for order in a.eae_records:
            ra = [(r.subject, r.target, r.error) for r in a.eae_records[order]]
            rb = [(r.subject, r.target, r.error) for r in b.eae_records[order]]
            assert ra == rb
        for order in a.confidence_records:
            ca = [(r.subject, r.log_score, r.percentile)
                  for r in a.confidence_records[order]]
            cb = [(r.subject, r.log_score, r.percentile)
                  for r in b.confidence_records[order]]
            assert ca == cb

    def test_too_few_subjects(self):
        cohort, _ = sample_cohort(small_demo_model(), 2,
                                  np.random.default_rng(0))
        with pytest.raises(ValueError):
            loo_evaluate(cohort, (1,), ("severity",), MODEL_MISSING, EmConfig())

    def test_continuous_target_rejected(self):
        cohort, _ = sample_cohort(small_demo_model(), 6,
                                  np.random.default_rng(0))
        with pytest.raises(Exception):
            loo_evaluate(cohort, (1,), ("marker_a",), MODEL_MISSING, EmConfig())

    def test_fold_failures_excluded(self, monkeypatch):
        import hetmix.evaluation as ev
        real = ev._evaluate_fold

        def flaky(dataset, subject, orders, targets, mode, config):
            if subject == 1:
                raise TrainingError("synthetic failure")
            return real(dataset, subject, orders, targets, mode, config)

        monkeypatch.setattr(ev, "_evaluate_fold", flaky)
        got = _tiny_loo(n=12, orders=(1,), sample_seed=2)
        assert [f.subject for f in got.failures] == [1]
        subjects = {r.subject for r in got.eae_records[1]}
        assert 1 not in subjects

    def test_abort_when_too_many_folds_fail(self, monkeypatch):
        import hetmix.evaluation as ev

        def broken(dataset, subject, orders, targets, mode, config):
            raise TrainingError("synthetic failure")

        monkeypatch.setattr(ev, "_evaluate_fold", broken)
        with pytest.raises(TrainingError):
            _tiny_loo(n=12, orders=(1,))
