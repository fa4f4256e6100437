"""Two-block Gibbs sampler for the conjugate Bayesian basis regression.

After whitening by the square-root weights (Z~ = sqrt(W) Z, y~ = sqrt(W) y),
the model is

    y~ | alpha, sigma2  ~  N(Z~ alpha, sigma2 I_N)
    alpha | sigma2      ~  N(0, sigma2 I_p / ridge)      ridge = 1/N
    sigma2              ~  InvGamma(a_sigma, b_sigma)

Both full conditionals are closed form: with M = Z~'Z~ + ridge I_p and
mu = M^-1 Z~'y~,

    sigma2 | alpha  ~ InvGamma(a_sigma + N/2 + p/2,
                               b_sigma + ||y~ - Z~ alpha||^2 / 2 + ridge ||alpha||^2 / 2)
    alpha | sigma2  ~ N(mu, sigma2 M^-1)

The chain initializes at the ridge solution mu.  The iteration loop runs in
a compiled kernel when available, with a NumPy fallback selected at import;
both consume identical pregenerated variates, so a fixed seed gives the same
chain up to floating point rounding on either backend.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .basis import DesignBundle
from .bootstrap import DrawSource, PosteriorDraws
from .errors import NumericalError
from .frequentist import WlsFit

try:
    from . import _gibbs_kernel as _compiled_kernel
except ImportError:  # extension not built; fall back to the reference loop
    _compiled_kernel = None
from . import _gibbs_py

_BACKEND_ENV = "TVCM_GIBBS_BACKEND"

DEFAULT_DRAWS = 2000
DEFAULT_BURNIN = 500

# a noiseless base fit cannot calibrate the variance prior; substitute this floor
B_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the conjugate prior."""

    a_sigma: float = 2.0
    b_sigma: float = 1.0
    ridge: float = 1.0

    def __post_init__(self) -> None:
        for name in ("a_sigma", "b_sigma", "ridge"):
            value = float(getattr(self, name))
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)

    def to_dict(self) -> dict:
        return {"a_sigma": self.a_sigma, "b_sigma": self.b_sigma, "ridge": self.ridge}


def whiten(bundle: DesignBundle) -> tuple[np.ndarray, np.ndarray]:
    """Fold the weights into the regression: returns (sqrt(W) Z, sqrt(W) y)."""
    sw = np.sqrt(bundle.weights)
    return bundle.Z * sw[:, None], bundle.y * sw


def default_prior(fit: WlsFit) -> PriorSpec:
    """Data-calibrated prior: a_sigma = 2, b_sigma = sigma2_hat, ridge = 1/N."""
    b_sigma = fit.sigma2_hat
    if b_sigma < B_SIGMA_FLOOR:
        warnings.warn(
            f"base fit sigma2_hat={b_sigma:.3e} is effectively zero; "
            f"substituting b_sigma={B_SIGMA_FLOOR:.1e}",
            stacklevel=2,
        )
        b_sigma = B_SIGMA_FLOOR
    return PriorSpec(a_sigma=2.0, b_sigma=b_sigma, ridge=1.0 / fit.n_obs)


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled_kernel is not None else ("python",)


def gibbs_backend() -> str:
    """Backend the next gibbs(..., backend='auto') call will use."""
    return _resolve_backend("auto")[1]


def _resolve_backend(name: str):
    if name == "auto":
        name = os.environ.get(_BACKEND_ENV, "").strip() or (
            "compiled" if _compiled_kernel is not None else "python"
        )
    if name == "compiled":
        if _compiled_kernel is None:
            raise NumericalError("compiled sampler kernel is not built; use backend='python'")
        return _compiled_kernel.run_chain, "compiled"
    if name == "python":
        return _gibbs_py.run_chain, "python"
    raise ValueError(f"unknown backend {name!r}; expected 'auto', 'compiled', or 'python'")


def gibbs(
    Z: np.ndarray,
    y: np.ndarray,
    prior: PriorSpec,
    draws: int = DEFAULT_DRAWS,
    burnin: int = DEFAULT_BURNIN,
    rng=0,
    fixed_sigma2: float | None = None,
    backend: str = "auto",
) -> PosteriorDraws:
    """Run the sampler on whitened inputs and return the retained draws.

    draws is the retained count after discarding burnin iterations.  Setting
    fixed_sigma2 pins the variance and skips its update, which makes the
    alpha draws independent samples from the exact Normal conditional.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[0],):
        raise ValueError("Z must be (N, p) and y must be length N")
    if draws < 1 or burnin < 0:
        raise ValueError(f"need draws >= 1 and burnin >= 0, got {draws}, {burnin}")
    n_obs, p = Z.shape
    seed = int(rng) if isinstance(rng, (int, np.integer)) else -1
    gen = np.random.default_rng(rng) if seed >= 0 else rng

    M = Z.T @ Z + prior.ridge * np.eye(p)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization of the ridge Gram matrix failed: {exc}") from exc
    mu = cho_solve((L, True), Z.T @ y)

    total = draws + burnin
    a_star = prior.a_sigma + n_obs / 2.0 + p / 2.0
    gammas = gen.standard_gamma(a_star, size=total)
    normals = gen.standard_normal((total, p))
    alpha_out = np.empty((total, p))
    sigma2_out = np.empty(total)
    kernel, _ = _resolve_backend(backend)
    kernel(
        Z,
        y,
        L,
        mu,
        prior.b_sigma,
        prior.ridge,
        gammas,
        normals,
        -1.0 if fixed_sigma2 is None else float(fixed_sigma2),
        mu.copy(),
        alpha_out,
        sigma2_out,
    )
    if not (np.all(np.isfinite(alpha_out)) and np.all(np.isfinite(sigma2_out))):
        raise NumericalError("sampler produced non-finite draws")
    return PosteriorDraws(
        alpha_draws=alpha_out[burnin:],
        sigma2_draws=sigma2_out[burnin:],
        source=DrawSource.GIBBS,
        seed=seed,
    )


def _deviance(Z, y, alpha, sigma2):
    resid = y - Z @ alpha
    n_obs = y.size
    return n_obs * np.log(2.0 * np.pi * sigma2) + (resid @ resid) / sigma2


def dic(draws: PosteriorDraws, Z: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Deviance information criterion and its effective parameter count.

    Uses the Gaussian likelihood of the whitened regression, the posterior
    means as the plug-in point, and p_DIC = mean deviance - deviance at the
    means.  Returns (dic, p_dic).
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = draws.alpha_draws
    sigma2 = draws.sigma2_draws
    if np.any(sigma2 <= 0):
        raise ValueError("DIC requires strictly positive variance draws")
    resid = y[None, :] - alpha @ Z.T
    dev = y.size * np.log(2.0 * np.pi * sigma2) + (resid**2).sum(axis=1) / sigma2
    dev_at_mean = _deviance(Z, y, alpha.mean(axis=0), float(sigma2.mean()))
    p_dic = float(dev.mean() - dev_at_mean)
    return float(dev_at_mean + 2.0 * p_dic), p_dic
