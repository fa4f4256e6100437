"""Synthetic data generators and the replication harness."""
from __future__ import annotations

import numpy as np
import pytest

from tvcm import gen_scenario1, gen_scenario2, run_replications
from tvcm.simgen import (
    SCENARIO1_LEVELS,
    SCENARIO1_SIGMA2,
    SCENARIO2_ERROR_VAR,
    SCENARIO2_SCHEDULE,
    scenario1_beta0,
    scenario1_correlation_bounds,
    scenario2_betas,
)


# ---------------------------------------------------------------------------
# Scenario 1
# ---------------------------------------------------------------------------


class TestScenario1:
    def test_deterministic_per_seed(self):
        a, _ = gen_scenario1(5, np.random.default_rng(3))
        b, _ = gen_scenario1(5, np.random.default_rng(3))
        for ra, rb in zip(a.subjects, b.subjects):
            np.testing.assert_array_equal(ra.times, rb.times)
            np.testing.assert_array_equal(ra.responses, rb.responses)

    def test_visit_masks_stable_under_growth(self):
        """Adding subjects must not disturb earlier subjects' substreams.

        Responses cannot match across different n because the noise scale
        depends on i/n, but the retained visit times must."""
        small, _ = gen_scenario1(3, np.random.default_rng(8))
        big, _ = gen_scenario1(6, np.random.default_rng(8))
        for ra, rb in zip(small.subjects, big.subjects[:3]):
            np.testing.assert_array_equal(ra.times, rb.times)

    def test_full_schedule_when_nothing_missing(self):
        data, _ = gen_scenario1(4, np.random.default_rng(1), m=6,
                                missing_rate=0.0)
        expected = np.arange(1, 7) / 7.0
        for rec in data.subjects:
            np.testing.assert_allclose(rec.times, expected)
        assert data.time_domain == (0.0, 1.0)

    def test_every_subject_keeps_at_least_one_point(self):
        """The retention mask is redrawn until non-empty, so aggressive
        missingness never produces an empty subject."""
        data, _ = gen_scenario1(50, np.random.default_rng(5), m=3,
                                missing_rate=0.97)
        assert data.n_subjects == 50
        assert min(data.counts) >= 1

    def test_truth_tabulates_intercept_curve(self):
        for shape in ("exp", "trig"):
            data, truth = gen_scenario1(6, np.random.default_rng(2),
                                        shape=shape)
            curve = scenario1_beta0(shape)
            np.testing.assert_allclose(truth.curves[0], curve(data.times),
                                       atol=1e-12)
            assert truth.curves[0].size == data.n_obs

    def test_level_table(self):
        assert SCENARIO1_LEVELS == {"weak": 0.01, "medium": 0.04,
                                    "high": 0.09}

    def test_correlation_bounds(self):
        np.testing.assert_allclose(scenario1_correlation_bounds("weak"),
                                   (0.0, 2 / 3))
        np.testing.assert_allclose(scenario1_correlation_bounds("medium"),
                                   (0.5, 5 / 6))
        np.testing.assert_allclose(scenario1_correlation_bounds("high"),
                                   (8 / 11, 10 / 11))

    def test_pointwise_variance_against_closed_form(self):
        """Monte Carlo variance of the response at fixed design points must
        match the sum of the random-curve and noise variances.

        With one subject and no missingness the response at time t is
        a0 + a1 cos(2 pi t) + a2 sin(2 pi t) + eps(t), so its variance is
        sigma0^2 + 0.01 cos^2 + 0.01 sin^2 + 0.01 (1 - e^(-t/2 - 1))^2.
        """
        reps = 20000
        root = np.random.default_rng(616)
        m = 3
        t = np.arange(1, m + 1) / (m + 1)
        samples = np.empty((reps, m))
        for r in range(reps):
            data, truth = gen_scenario1(1, root.spawn(1)[0], m=m,
                                        missing_rate=0.0, level="weak",
                                        shape="exp")
            samples[r] = data.responses - truth.curves[0]
        got = samples.var(axis=0, ddof=1)
        sigma0_sq = SCENARIO1_LEVELS["weak"]
        noise = SCENARIO1_SIGMA2 * (1.0 - np.exp(-t / 2.0 - 1.0)) ** 2
        expected = (sigma0_sq + 0.01 * np.cos(2 * np.pi * t) ** 2
                    + 0.01 * np.sin(2 * np.pi * t) ** 2 + noise)
        se = expected * np.sqrt(2.0 / (reps - 1))
        assert np.all(np.abs(got - expected) < 3 * se)


# ---------------------------------------------------------------------------
# Scenario 2
# ---------------------------------------------------------------------------


class TestScenario2:
    def test_curve_values_at_midpoint(self):
        b0, b1, b2 = scenario2_betas()
        assert b0(30.0) == pytest.approx(10.0)
        assert b1(30.0) == pytest.approx(-1.8)
        assert b2(30.0) == pytest.approx(0.25)

    def test_times_are_retained_integer_visits(self):
        data, _ = gen_scenario2(12, np.random.default_rng(0))
        assert data.time_domain == (0.0, 31.0)
        for rec in data.subjects:
            assert np.all(np.isin(rec.times, SCENARIO2_SCHEDULE))
            assert np.all(np.diff(rec.times) >= 1.0)

    def test_covariates_constant_within_subject(self):
        data, _ = gen_scenario2(40, np.random.default_rng(6))
        x1_values = set()
        for rec in data.subjects:
            assert np.all(rec.covariates[:, 0] == rec.covariates[0, 0])
            assert np.all(rec.covariates[:, 1] == rec.covariates[0, 1])
            x1_values.add(float(rec.covariates[0, 0]))
        assert x1_values <= {0.0, 1.0}

    def test_truth_tabulates_all_three_curves(self):
        data, truth = gen_scenario2(9, np.random.default_rng(2))
        for curve, fn in zip(truth.curves, scenario2_betas()):
            np.testing.assert_allclose(curve, fn(data.times), atol=1e-12)

    def test_truth_ranges_positive(self):
        _, truth = gen_scenario2(9, np.random.default_rng(2))
        assert all(r > 0 for r in truth.ranges())

    def test_error_process_lag_one_correlation(self):
        """Unit-lag residual pairs within subjects must show correlation
        close to e^-1 under the exponential covariance."""
        data, truth = gen_scenario2(7000, np.random.default_rng(99))
        b = np.column_stack(truth.curves)
        x = np.column_stack([np.ones(data.n_obs), data.covariates])
        eps = data.responses - np.sum(x * b, axis=1)
        first, second = [], []
        row = 0
        for rec in data.subjects:
            k = rec.n_obs
            gaps = np.diff(rec.times)
            for j, gap in enumerate(gaps):
                if gap == 1.0:
                    first.append(eps[row + j])
                    second.append(eps[row + j + 1])
            row += k
        first, second = np.asarray(first), np.asarray(second)
        assert first.size > 30000
        corr = np.corrcoef(first, second)[0, 1]
        se = (1.0 - np.exp(-2.0)) / np.sqrt(first.size)
        assert abs(corr - np.exp(-1.0)) < 3 * se

    def test_error_variance_scale(self):
        data, truth = gen_scenario2(4000, np.random.default_rng(31))
        b = np.column_stack(truth.curves)
        x = np.column_stack([np.ones(data.n_obs), data.covariates])
        eps = data.responses - np.sum(x * b, axis=1)
        var = eps.var(ddof=1)
        se = SCENARIO2_ERROR_VAR * np.sqrt(2.0 / (eps.size - 1))
        # residuals are correlated within subjects, hence the wide cushion
        assert abs(var - SCENARIO2_ERROR_VAR) < 10 * se

    def test_deterministic_per_seed(self):
        a, _ = gen_scenario2(5, np.random.default_rng(4))
        b, _ = gen_scenario2(5, np.random.default_rng(4))
        for ra, rb in zip(a.subjects, b.subjects):
            np.testing.assert_array_equal(ra.responses, rb.responses)
            np.testing.assert_array_equal(ra.covariates, rb.covariates)

    def test_subject_substreams_stable_under_growth(self):
        """Unlike scenario 1 nothing here depends on n, so the first
        subjects of a larger panel reproduce the smaller panel exactly."""
        small, _ = gen_scenario2(4, np.random.default_rng(14))
        big, _ = gen_scenario2(9, np.random.default_rng(14))
        for ra, rb in zip(small.subjects, big.subjects[:4]):
            np.testing.assert_array_equal(ra.times, rb.times)
            np.testing.assert_array_equal(ra.responses, rb.responses)
            np.testing.assert_array_equal(ra.covariates, rb.covariates)


# ---------------------------------------------------------------------------
# Replication harness
# ---------------------------------------------------------------------------


class TestRunReplications:
    def test_single_replication_deterministic(self, tmp_path):
        """Everything except wall time is reproducible at a fixed seed."""
        kwargs = dict(scenario=1, n=8, reps=1, rng=5, engines=("wls",),
                      families=("radial",), degree=2, k_max=2, level="weak",
                      shape="trig")
        a = run_replications(**kwargs)
        b = run_replications(**kwargs)

        def strip_timing(rows):
            return [{k: v for k, v in row.items() if k != "millis"}
                    for row in rows]

        assert strip_timing(a.rows) == strip_timing(b.rows)
        path = tmp_path / "report.csv"
        a.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "rep,seed,engine,basis,knots,metric,millis,status"
        assert len(lines) == 2

    def test_row_grid_covers_engines_and_bases(self):
        report = run_replications(scenario=1, n=8, reps=2, rng=5,
                                  engines=("wls",),
                                  families=("radial", "tpower"), degree=2,
                                  k_max=2, level="weak", shape="trig")
        assert len(report.rows) == 4
        assert report.failures == 0
        for row in report.rows:
            assert row["status"] == "ok"
            assert row["metric"] >= 0.0
            assert row["millis"] >= 0.0

    def test_failures_recorded_not_raised(self):
        """One subject cannot support a degree-25 polynomial, so every cell
        fails; the harness records the error type and keeps going."""
        report = run_replications(scenario=1, n=1, reps=2, rng=5,
                                  engines=("wls",), families=("radial",),
                                  degree=25, k_max=0, level="weak",
                                  shape="trig")
        assert report.failures == len(report.rows) == 2
        for row in report.rows:
            assert row["status"] != "ok"
            assert np.isnan(row["metric"])

    def test_summary_quartiles(self):
        report = run_replications(scenario=2, n=10, reps=3, rng=7,
                                  engines=("wls",), families=("radial",),
                                  degree=2, k_max=1)
        cell = report.summary()["cells"]["wls/radial"]
        assert cell["n_ok"] == 3
        vals = report.metrics("wls", "radial")
        assert cell["q1"] <= cell["median"] <= cell["q3"]
        assert cell["median"] == pytest.approx(float(np.median(vals)))

    def test_metric_definitions_by_scenario(self):
        """Scenario 1 scores the intercept curve squared error; scenario 2
        scores the range-scaled absolute deviation of all three curves."""
        r1 = run_replications(scenario=1, n=8, reps=1, rng=3,
                              engines=("wls",), families=("radial",),
                              degree=2, k_max=1, level="weak", shape="trig")
        r2 = run_replications(scenario=2, n=10, reps=1, rng=3,
                              engines=("wls",), families=("radial",),
                              degree=2, k_max=1)
        assert r1.params["metric"] == "amse"
        assert r2.params["metric"] == "made"
