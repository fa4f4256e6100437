"""Subject resampling, bootstrap replication, and percentile intervals."""
from __future__ import annotations

import numpy as np
import pytest

from tvcm import LongitudinalDataset, SubjectRecord, gen_scenario1
from tvcm.basis import build_design, make_spec
from tvcm.bootstrap import (
    DrawSource,
    PosteriorDraws,
    bootstrap_fit,
    percentile_interval,
    resample_subjects,
)
from tvcm.errors import BootstrapDegeneracyError
from tvcm.frequentist import fit_wls

from conftest import exact_response_dataset


def _one_obs_each(n: int) -> LongitudinalDataset:
    subjects = tuple(
        SubjectRecord(f"s{i}", [i / max(n - 1, 1)], [float(i)],
                      np.empty((1, 0)))
        for i in range(n)
    )
    return LongitudinalDataset(subjects)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


class TestResample:
    def test_same_seed_same_resample(self):
        data = _one_obs_each(5)
        a = resample_subjects(data, np.random.default_rng(3))
        b = resample_subjects(data, np.random.default_rng(3))
        assert [s.subject_id for s in a.subjects] == [s.subject_id
                                                      for s in b.subjects]

    def test_single_subject_always_drawn(self):
        data = _one_obs_each(1)
        out = resample_subjects(data, np.random.default_rng(0))
        assert out.n_subjects == 1
        assert out.subjects[0].subject_id.startswith("s0#")

    def test_slot_suffixes_make_ids_unique(self):
        data = _one_obs_each(3)
        out = resample_subjects(data, np.random.default_rng(1))
        ids = [s.subject_id for s in out.subjects]
        assert len(set(ids)) == 3
        assert all("#" in sid for sid in ids)

    def test_slot_frequencies_uniform(self):
        """Each of 3 subjects lands in each slot with frequency 1/3 plus or
        minus 0.02 over 10,000 resamples."""
        data = _one_obs_each(3)
        gen = np.random.default_rng(123)
        counts = np.zeros((3, 3))
        for _ in range(10000):
            out = resample_subjects(data, gen)
            for slot, rec in enumerate(out.subjects):
                counts[slot, int(rec.subject_id.split("#")[0][1:])] += 1
        freq = counts / 10000
        assert freq.min() > 1 / 3 - 0.02
        assert freq.max() < 1 / 3 + 0.02

    def test_domain_and_rows_preserved(self):
        data, _ = gen_scenario1(6, np.random.default_rng(2))
        out = resample_subjects(data, np.random.default_rng(5))
        assert out.time_domain == data.time_domain
        assert out.n_subjects == data.n_subjects


# ---------------------------------------------------------------------------
# Bootstrap replication
# ---------------------------------------------------------------------------


class TestBootstrapFit:
    def test_single_draw_composes_resample_and_fit(self):
        """One bootstrap draw equals resample -> rebuild weights -> WLS run
        by hand with the same spawned substream."""
        data, _ = gen_scenario1(8, np.random.default_rng(21), m=6,
                                level="weak", shape="trig")
        specs = (make_spec("radial", 2, 1, data.time_domain),)
        draws = bootstrap_fit(data, specs, 1, np.random.default_rng(77))
        manual = fit_wls(build_design(
            resample_subjects(data, np.random.default_rng(77).spawn(1)[0]),
            specs))
        np.testing.assert_array_equal(draws.alpha_draws[0], manual.alpha_hat)
        np.testing.assert_array_equal(draws.sigma2_draws[0],
                                      manual.sigma2_hat)

    def test_deterministic_given_seed(self):
        data, _ = gen_scenario1(8, np.random.default_rng(21), m=6,
                                level="weak", shape="trig")
        specs = (make_spec("radial", 2, 1, data.time_domain),)
        a = bootstrap_fit(data, specs, 12, np.random.default_rng(5))
        b = bootstrap_fit(data, specs, 12, np.random.default_rng(5))
        np.testing.assert_array_equal(a.alpha_draws, b.alpha_draws)

    def test_threaded_run_matches_serial(self):
        data, _ = gen_scenario1(8, np.random.default_rng(21), m=6,
                                level="weak", shape="trig")
        specs = (make_spec("radial", 2, 1, data.time_domain),)
        serial = bootstrap_fit(data, specs, 16, np.random.default_rng(5))
        threaded = bootstrap_fit(data, specs, 16, np.random.default_rng(5),
                                 threads=4)
        np.testing.assert_array_equal(serial.alpha_draws,
                                      threaded.alpha_draws)
        np.testing.assert_array_equal(serial.sigma2_draws,
                                      threaded.sigma2_draws)

    def test_noiseless_draws_all_equal_truth(self):
        """With responses exactly on the fitted surface, every replicate fit
        returns the same coefficients."""
        base, _ = gen_scenario1(12, np.random.default_rng(42), m=6,
                                level="weak", shape="exp")
        specs = (make_spec("radial", 2, 1, base.time_domain),)
        bundle = build_design(base, specs)
        alpha_star = np.random.default_rng(5).standard_normal(bundle.n_params)
        clean = exact_response_dataset(base, specs, alpha_star)
        draws = bootstrap_fit(clean, specs, 20, np.random.default_rng(9))
        assert np.abs(draws.alpha_draws - alpha_star).max() < 1e-10
        assert draws.sigma2_draws.max() <= 1e-16

    def test_degenerate_resamples_exhaust_budget(self):
        """Eight one-observation subjects under a degree-6 polynomial: most
        resamples lose too many distinct times, so the redraw budget of
        10 * n_draws runs out."""
        data = _one_obs_each(8)
        specs = (make_spec("tpower", 6, 0, data.time_domain),)
        with pytest.raises(BootstrapDegeneracyError):
            bootstrap_fit(data, specs, 5, np.random.default_rng(0))

    def test_redraws_recover_from_singular_attempts(self):
        """Six one-observation subjects under a degree-4 polynomial succeed
        only ~25% of the time per attempt, forcing several redraw waves."""
        data = _one_obs_each(6)
        specs = (make_spec("tpower", 4, 0, data.time_domain),)
        draws = bootstrap_fit(data, specs, 10, np.random.default_rng(0))
        assert draws.n_draws == 10
        assert draws.source is DrawSource.BOOTSTRAP

    def test_infeasible_base_fit_raises_before_resampling(self):
        data = _one_obs_each(3)
        specs = (make_spec("tpower", 3, 0, data.time_domain),)  # p = 4 > N
        with pytest.raises(Exception) as exc_info:
            bootstrap_fit(data, specs, 4, np.random.default_rng(0))
        assert not isinstance(exc_info.value, BootstrapDegeneracyError)


# ---------------------------------------------------------------------------
# Percentile intervals
# ---------------------------------------------------------------------------


class TestPercentileInterval:
    def test_hand_example(self):
        """50% interval of 1..100 under linear rank interpolation."""
        lo, hi = percentile_interval(np.arange(1.0, 101.0), 0.5)
        assert lo == pytest.approx(25.75)
        assert hi == pytest.approx(75.25)

    def test_constant_samples_collapse(self):
        lo, hi = percentile_interval(np.full(40, 3.25), 0.95)
        assert lo == hi == 3.25

    def test_nesting(self):
        samples = np.random.default_rng(0).standard_normal(400)
        lo95, hi95 = percentile_interval(samples, 0.95)
        lo99, hi99 = percentile_interval(samples, 0.99)
        assert lo99 <= lo95 < hi95 <= hi99

    def test_extreme_level_stays_within_tail_gaps(self):
        """When level >= 1 - 2/B the endpoints sit between the extreme order
        statistics, and in the level -> 1 limit they hit min and max."""
        samples = np.arange(1.0, 101.0)
        lo, hi = percentile_interval(samples, 0.999)
        assert 1.0 <= lo <= 2.0
        assert 99.0 <= hi <= 100.0
        lo1, hi1 = percentile_interval(samples, 1.0 - 1e-15)
        assert lo1 == pytest.approx(1.0)
        assert hi1 == pytest.approx(100.0)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            percentile_interval(np.arange(5.0), 0.0)
        with pytest.raises(ValueError):
            percentile_interval(np.array([]), 0.5)


# ---------------------------------------------------------------------------
# Draw container
# ---------------------------------------------------------------------------


class TestPosteriorDraws:
    def test_bootstrap_allows_zero_variance(self):
        d = PosteriorDraws(np.zeros((3, 2)), np.zeros(3),
                           DrawSource.BOOTSTRAP, 1)
        assert d.n_draws == 3

    def test_sampler_sources_need_positive_variance(self):
        with pytest.raises(ValueError):
            PosteriorDraws(np.zeros((3, 2)), np.zeros(3), DrawSource.GIBBS, 1)

    def test_csv_layout(self, tmp_path):
        """Long format: one row per draw and parameter, sigma2 stored as
        parameter index p."""
        d = PosteriorDraws(np.arange(6.0).reshape(3, 2),
                           np.array([1.0, 2.0, 3.0]), DrawSource.BOOTSTRAP, 7)
        path = tmp_path / "draws.csv"
        d.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "draw,param_index,value"
        assert len(lines) == 1 + 3 * 3
        assert lines[1] == "0,0,0.0"
        assert lines[3] == "0,2,1.0"

    def test_summary_contract(self):
        d = PosteriorDraws(np.arange(8.0).reshape(4, 2),
                           np.full(4, 0.5), DrawSource.BOOTSTRAP, -1)
        s = d.summary(0.5)
        assert s["n_draws"] == 4
        assert s["level"] == 0.5
        np.testing.assert_allclose(s["alpha_mean"], [3.0, 4.0])
        assert s["source"] == "bootstrap"
