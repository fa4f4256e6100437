"""Subject-level bootstrap for the weighted least squares fit.

A bootstrap replicate resamples n subjects with replacement, keeping each
drawn copy as a distinct subject, recomputes the subject-uniform weights for
the resampled data, and refits.  Replicates whose resampled design is
singular are redrawn, with the total number of attempts capped at ten times
the requested draw count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .basis import build_design
from .data import LongitudinalDataset, SubjectRecord
from .errors import BootstrapDegeneracyError, InsufficientDataError, SingularDesignError
from .frequentist import fit_wls

REDRAW_FACTOR = 10


class DrawSource(str, Enum):
    BOOTSTRAP = "bootstrap"
    GIBBS = "gibbs"
    VARIATIONAL = "variational"


@dataclass(frozen=True)
class PosteriorDraws:
    """Matrix of coefficient draws with their noise variances.

    Shared container for bootstrap replicates and Bayesian posterior samples;
    sigma2_draws holds variances (sigma squared), strictly positive for the
    Bayesian sources.  seed records the master seed, -1 when the caller
    passed a live Generator instead of an integer.
    """

    alpha_draws: np.ndarray
    sigma2_draws: np.ndarray
    source: DrawSource
    seed: int = -1

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha_draws, dtype=float)
        sigma2 = np.asarray(self.sigma2_draws, dtype=float)
        if alpha.ndim != 2 or alpha.shape[0] < 1:
            raise ValueError("alpha_draws must be a (n_draws, p) matrix with n_draws >= 1")
        if sigma2.shape != (alpha.shape[0],):
            raise ValueError("sigma2_draws length must match the number of draws")
        source = DrawSource(self.source)
        if source is DrawSource.BOOTSTRAP:
            if np.any(sigma2 < 0):
                raise ValueError("bootstrap variance draws must be non-negative")
        elif np.any(sigma2 <= 0):
            raise ValueError(f"{source.value} variance draws must be strictly positive")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(sigma2))):
            raise ValueError("draws contain non-finite values")
        alpha.setflags(write=False)
        sigma2.setflags(write=False)
        object.__setattr__(self, "alpha_draws", alpha)
        object.__setattr__(self, "sigma2_draws", sigma2)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_draws(self) -> int:
        return self.alpha_draws.shape[0]

    @property
    def n_params(self) -> int:
        return self.alpha_draws.shape[1]

    def to_csv(self, path) -> None:
        """Flat draw,param_index,value rows; indices 0..p-1 are coefficients, p is sigma2."""
        p = self.n_params
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["draw", "param_index", "value"])
            for b in range(self.n_draws):
                for j in range(p):
                    writer.writerow([b, j, repr(float(self.alpha_draws[b, j]))])
                writer.writerow([b, p, repr(float(self.sigma2_draws[b]))])

    def summary(self, level: float = 0.95) -> dict:
        """Means and central intervals for every parameter."""
        lows, highs = [], []
        for j in range(self.n_params):
            lo, hi = percentile_interval(self.alpha_draws[:, j], level)
            lows.append(lo)
            highs.append(hi)
        s_lo, s_hi = percentile_interval(self.sigma2_draws, level)
        return {
            "source": self.source.value,
            "seed": self.seed,
            "n_draws": self.n_draws,
            "level": level,
            "alpha_mean": self.alpha_draws.mean(axis=0).tolist(),
            "alpha_lower": lows,
            "alpha_upper": highs,
            "sigma2_mean": float(self.sigma2_draws.mean()),
            "sigma2_lower": s_lo,
            "sigma2_upper": s_hi,
        }


def percentile_interval(samples, level: float) -> tuple[float, float]:
    """Central interval from order statistics with linear rank interpolation."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot form a percentile interval from zero samples")
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(samples, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)


def resample_subjects(data: LongitudinalDataset, rng: np.random.Generator) -> LongitudinalDataset:
    """Draw n subjects with replacement; copies get '#<slot>' id suffixes to stay distinct."""
    n = data.n_subjects
    picks = rng.integers(0, n, size=n)
    subjects = []
    for slot, pick in enumerate(picks):
        src = data.subjects[pick]
        subjects.append(
            SubjectRecord(
                subject_id=f"{src.subject_id}#{slot}",
                times=src.times,
                responses=src.responses,
                covariates=src.covariates,
            )
        )
    return LongitudinalDataset(subjects=tuple(subjects), time_domain=data.time_domain)


def _one_attempt(data, specs, rng):
    resampled = resample_subjects(data, rng)
    try:
        fit = fit_wls(build_design(resampled, specs))
    except (SingularDesignError, InsufficientDataError):
        return None
    return fit.alpha_hat, fit.sigma2_hat


def bootstrap_fit(
    data: LongitudinalDataset,
    specs,
    n_draws: int,
    rng,
    threads: int = 1,
) -> PosteriorDraws:
    """Collect n_draws successful replicate fits.

    Per-attempt RNG streams are spawned deterministically from the master
    seed in attempt order, so results do not depend on thread interleaving;
    draws are assembled in attempt-index order.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else -1
    gen = np.random.default_rng(rng) if seed >= 0 else rng
    # the full-data fit must be feasible before resampling starts
    fit_wls(build_design(data, specs))

    cap = REDRAW_FACTOR * n_draws
    results: list[tuple[int, np.ndarray, float]] = []
    attempts_used = 0
    while len(results) < n_draws and attempts_used < cap:
        wave = min(n_draws - len(results), cap - attempts_used)
        streams = gen.spawn(wave)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outcomes = list(pool.map(lambda s: _one_attempt(data, specs, s), streams))
        else:
            outcomes = [_one_attempt(data, specs, s) for s in streams]
        for offset, outcome in enumerate(outcomes):
            if outcome is not None:
                alpha, sigma2 = outcome
                results.append((attempts_used + offset, alpha, sigma2))
        attempts_used += wave
    if len(results) < n_draws:
        raise BootstrapDegeneracyError(
            f"only {len(results)} of {n_draws} replicates succeeded within {attempts_used} attempts"
        )
    results.sort(key=lambda item: item[0])
    results = results[:n_draws]
    return PosteriorDraws(
        alpha_draws=np.array([alpha for _, alpha, _ in results]),
        sigma2_draws=np.array([s2 for _, _, s2 in results]),
        source=DrawSource.BOOTSTRAP,
        seed=seed,
    )
