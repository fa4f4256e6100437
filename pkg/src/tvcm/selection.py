"""Knot selection by predictive cross-validation and fit-quality metrics.

The fast selection criterion replaces the leave-one-out sum

    PCV = sum_ij w_i (y_ij - yhat_ij^(-ij))^2

by the algebraically motivated trace form

    PCV = (y - A y)' W (y - A y) / (1 - tr(A)/N)^2

with A the weighted hat matrix, which needs a single fit per candidate.
Both forms are provided; the brute evaluator keeps the full-data weights
when refitting without one observation.
"""

from __future__ import annotations

import itertools

import numpy as np

from .basis import BasisFamily, DesignBundle, build_design, make_spec
from .data import LongitudinalDataset, SubjectRecord, subject_uniform_weights
from .engines import fit_engine
from .errors import (
    DataError,
    InsufficientDataError,
    KnotError,
    SelectionError,
    SingularDesignError,
)
from .frequentist import WlsFit, fit_wls, predict_rows

MAX_SWEEPS = 100
# full enumeration is the default up to this many covariates and candidate knot counts
FULL_GRID_MAX_COVARIATES = 2
FULL_GRID_MAX_K = 10


def pcv(bundle: DesignBundle, fit: WlsFit) -> float:
    """Trace-form criterion; +inf when tr(A) >= N leaves no residual degrees of freedom."""
    n_obs = bundle.n_obs
    shrink = 1.0 - fit.hat_trace / n_obs
    if shrink <= 0:
        return float("inf")
    wrss = float(bundle.weights @ fit.residuals**2)
    return wrss / shrink**2


def pcv_loo(data: LongitudinalDataset, specs) -> float:
    """Brute leave-one-out criterion: N refits, each dropping one observation.

    The remaining rows keep their full-data weights, matching the fit the
    trace form shortcuts.
    """
    weights = subject_uniform_weights(data)
    bundle = build_design(data, specs, weights)
    n_obs, p = bundle.n_obs, bundle.n_params
    if n_obs - 1 <= p:
        raise SelectionError(f"cannot leave one of {n_obs} observations out with {p} coefficients")
    Z, y = bundle.Z, bundle.y
    total = 0.0
    for idx in range(n_obs):
        keep = np.arange(n_obs) != idx
        sub = DesignBundle(
            Z=Z[keep],
            y=y[keep],
            weights=weights[keep],
            block_dims=bundle.block_dims,
            specs=bundle.specs,
        )
        try:
            fit = fit_wls(sub)
        except (SingularDesignError, InsufficientDataError) as exc:
            raise SelectionError(f"leave-one-out refit without row {idx} failed: {exc}") from exc
        pred = float(Z[idx] @ fit.alpha_hat)
        total += weights[idx] * (y[idx] - pred) ** 2
    return total


def _candidate_pcv(data, family, degree, combo, weights, bandwidth=None):
    try:
        specs = tuple(
            make_spec(family, degree, k, data.time_domain, bandwidth=bandwidth) for k in combo
        )
        bundle = build_design(data, specs, weights)
        fit = fit_wls(bundle)
    except (SingularDesignError, InsufficientDataError, KnotError):
        return float("inf")
    return pcv(bundle, fit)


def knot_search(
    data: LongitudinalDataset,
    family,
    degree: int,
    k_max: int,
    strategy: str = "auto",
) -> tuple[tuple[int, ...], list[dict]]:
    """Minimize the trace-form criterion over per-coefficient knot counts.

    Returns the winning (k_0, ..., k_d) and the table of evaluated
    candidates.  'full' enumerates the grid {0..k_max}^(d+1) in
    lexicographic order with strict improvement, so ties resolve toward
    smaller counts; 'coordinate' descends one coordinate at a time from all
    zeros.  'auto' uses the full grid for small problems.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    family = BasisFamily(family)
    n_coef = data.covariate_dim + 1
    if strategy == "auto":
        small = data.covariate_dim <= FULL_GRID_MAX_COVARIATES and k_max <= FULL_GRID_MAX_K
        strategy = "full" if small else "coordinate"
    if strategy not in ("full", "coordinate"):
        raise ValueError(f"unknown strategy {strategy!r}")

    weights = subject_uniform_weights(data)
    cache: dict[tuple[int, ...], float] = {}

    def evaluate(combo: tuple[int, ...]) -> float:
        if combo not in cache:
            cache[combo] = _candidate_pcv(data, family, degree, combo, weights)
        return cache[combo]

    if strategy == "full":
        best, best_value = None, float("inf")
        for combo in itertools.product(range(k_max + 1), repeat=n_coef):
            value = evaluate(combo)
            if value < best_value:
                best, best_value = combo, value
    else:
        best = (0,) * n_coef
        best_value = evaluate(best)
        for _ in range(MAX_SWEEPS):
            changed = False
            for r in range(n_coef):
                for k in range(k_max + 1):
                    candidate = best[:r] + (k,) + best[r + 1 :]
                    value = evaluate(candidate)
                    if value < best_value:
                        best, best_value = candidate, value
                        changed = True
            if not changed:
                break
    if best is None or not np.isfinite(best_value):
        raise SelectionError(f"no feasible knot configuration up to k_max={k_max}")
    table = [{"k": list(combo), "pcv": value} for combo, value in sorted(cache.items())]
    return best, table


def select_knots(
    data: LongitudinalDataset,
    family,
    degree: int,
    k_max: int,
    strategy: str = "auto",
) -> tuple[int, ...]:
    return knot_search(data, family, degree, k_max, strategy)[0]


def amse(truth, estimate, counts) -> float:
    """Average squared error of one coefficient curve over the design points,
    weighting each subject's points by 1/(n n_i)."""
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    counts = np.asarray(counts)
    if truth.shape != estimate.shape:
        raise ValueError(f"truth shape {truth.shape} != estimate shape {estimate.shape}")
    if counts.sum() != truth.size:
        raise ValueError(f"counts sum to {counts.sum()} but curves have {truth.size} points")
    weights = np.repeat(1.0 / (counts.size * counts), counts)
    return float(weights @ (truth - estimate) ** 2)


def made(truths, estimates, counts, ranges) -> float:
    """Mean absolute deviation over all coefficient curves, each scaled by the
    range of its true curve across the design points."""
    truths = [np.asarray(t, dtype=float) for t in truths]
    estimates = [np.asarray(e, dtype=float) for e in estimates]
    ranges = [float(r) for r in ranges]
    if not (len(truths) == len(estimates) == len(ranges)):
        raise ValueError("truths, estimates, and ranges must have one entry per coefficient")
    counts = np.asarray(counts)
    weights = np.repeat(1.0 / (counts.size * counts), counts)
    total = 0.0
    for truth, estimate, rng_r in zip(truths, estimates, ranges):
        if truth.shape != estimate.shape or truth.size != weights.size:
            raise ValueError("curve arrays do not match the dataset layout")
        if rng_r <= 0:
            raise ValueError(f"coefficient range must be positive, got {rng_r}")
        total += float(weights @ np.abs(truth - estimate)) / rng_r
    return total


def _take_rows(data: LongitudinalDataset, keep: np.ndarray) -> LongitudinalDataset:
    """Dataset restricted to the kept stacked-row indices; empty subjects drop out."""
    keep_mask = np.zeros(data.n_obs, dtype=bool)
    keep_mask[keep] = True
    subjects = []
    offset = 0
    for record in data.subjects:
        local = keep_mask[offset : offset + record.n_obs]
        offset += record.n_obs
        if not local.any():
            continue
        subjects.append(
            SubjectRecord(
                subject_id=record.subject_id,
                times=record.times[local],
                responses=record.responses[local],
                covariates=record.covariates[local],
            )
        )
    if not subjects:
        raise DataError("no subjects left after removing held-out rows")
    return LongitudinalDataset(subjects=tuple(subjects), time_domain=data.time_domain)


def crossval_amse(
    data: LongitudinalDataset,
    specs,
    n_folds: int,
    rng=0,
    engine: str = "wls",
    draws: int = 0,
    burnin: int = 500,
    tol: float = 1e-6,
) -> float:
    """Predictive mean squared error over a random observation-level partition.

    Observations (not subjects) are split into n_folds folds; each training
    fit recomputes the subject-uniform weights on the reduced data, and
    held-out points score unweighted squared error.  n_folds = N is
    leave-one-out.
    """
    n_obs = data.n_obs
    if not 2 <= n_folds <= n_obs:
        raise ValueError(f"n_folds must be in [2, {n_obs}], got {n_folds}")
    seed_given = isinstance(rng, (int, np.integer))
    gen = np.random.default_rng(rng) if seed_given else rng
    perm = gen.permutation(n_obs)
    folds = np.array_split(perm, n_folds)
    fold_rngs = gen.spawn(n_folds)

    specs = tuple(specs)
    all_times = data.times
    all_x = data.covariates
    all_y = data.responses
    total = 0.0
    for f, fold in enumerate(folds):
        train_idx = np.setdiff1d(perm, fold)
        try:
            train = _take_rows(data, train_idx)
            result = fit_engine(
                train, specs, engine, rng=fold_rngs[f], draws=draws, burnin=burnin, tol=tol
            )
        except (SingularDesignError, InsufficientDataError, DataError) as exc:
            raise SelectionError(f"fold {f} is infeasible: {exc}") from exc
        preds = predict_rows(result.alpha, specs, all_x[fold], all_times[fold])
        total += float(np.sum((all_y[fold] - preds) ** 2))
    return total / n_obs
