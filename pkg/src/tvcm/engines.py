"""Uniform front end over the three inference engines.

Given a dataset and basis specs, fit_engine produces a point estimate of the
stacked coefficients plus optional draws, timing only the inference stage
(bootstrap replicates, sampler iterations including burn-in, or variational
optimization plus sampling) so the engines can be compared on equal terms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .basis import build_design
from .bootstrap import PosteriorDraws, bootstrap_fit
from .data import LongitudinalDataset
from .frequentist import WlsFit, fit_wls
from .mcmc import DEFAULT_BURNIN, DEFAULT_DRAWS, default_prior, gibbs, whiten
from .vb import DEFAULT_MAX_ITERS, DEFAULT_TOL, vb_fit, vb_sample

ENGINES = ("wls", "gibbs", "vb")


@dataclass
class EngineResult:
    engine: str
    alpha: np.ndarray
    base_fit: WlsFit
    draws: PosteriorDraws | None
    sampling_seconds: float
    extra: dict = field(default_factory=dict)


def fit_engine(
    data: LongitudinalDataset,
    specs,
    engine: str,
    rng=0,
    draws: int = 0,
    burnin: int = DEFAULT_BURNIN,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    threads: int = 1,
    backend: str = "auto",
) -> EngineResult:
    """Fit one engine; draws=0 means the engine default (none for wls)."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    bundle = build_design(data, specs)
    base = fit_wls(bundle)
    if engine == "wls":
        if draws > 0:
            start = time.perf_counter()
            boot = bootstrap_fit(data, specs, draws, rng, threads=threads)
            elapsed = time.perf_counter() - start
        else:
            boot, elapsed = None, 0.0
        return EngineResult("wls", base.alpha_hat, base, boot, elapsed)

    prior = default_prior(base)
    z_t, y_t = whiten(bundle)
    n_draws = draws if draws > 0 else DEFAULT_DRAWS
    if engine == "gibbs":
        start = time.perf_counter()
        out = gibbs(z_t, y_t, prior, draws=n_draws, burnin=burnin, rng=rng, backend=backend)
        elapsed = time.perf_counter() - start
        return EngineResult(
            "gibbs", out.alpha_draws.mean(axis=0), base, out, elapsed, {"prior": prior.to_dict()}
        )
    start = time.perf_counter()
    post = vb_fit(z_t, y_t, prior, tol=tol, max_iters=max_iters)
    out = vb_sample(post, n_draws, rng)
    elapsed = time.perf_counter() - start
    return EngineResult(
        "vb",
        post.m_star,
        base,
        out,
        elapsed,
        {"prior": prior.to_dict(), "posterior": post.to_dict(), "converged": post.converged},
    )
