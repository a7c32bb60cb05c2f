"""Joint posterior of one coefficient vector under iid Gamma time-domain noise.

With ``d = theta + W eps`` and ``eps_i ~ Gamma(a, b)`` iid, the time-domain
residual ``r = W'(d - theta)`` must be strictly positive and the likelihood
is the product of Gamma densities at ``r``. Detail coefficients get a
spike-and-slab prior whose spike is a very narrow logistic (scale
``spike_scale_fraction * tau``) so that the posterior has a density a
random-walk sampler can explore; scaling coefficients get a flat prior.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .errors import InvalidInputError
from .noise import GammaNoiseSpec, column_rngs
from .ram import ChainResult, RamConfig, posterior_mean, run_chain_compiled
from .shrinkage import PriorConfig, log_logistic_density
from .wavelets import TransformPlan, build_transform_matrix, dwt, idwt

__all__ = [
    "GammaModel",
    "log_likelihood",
    "log_prior",
    "log_posterior",
    "feasible_init",
    "gamma_moment_estimate",
    "compiled_target",
    "shrink_panel_gamma",
]


@dataclass(frozen=True)
class GammaModel:
    plan: TransformPlan
    gamma: GammaNoiseSpec
    prior: PriorConfig = PriorConfig(p=0.75, tau=5.0)
    spike_scale_fraction: float = 1e-4

    def __post_init__(self):
        if not self.spike_scale_fraction > 0:
            raise InvalidInputError(
                f"spike scale fraction must be positive, got {self.spike_scale_fraction}"
            )

    @property
    def spike_scale(self) -> float:
        return self.spike_scale_fraction * self.prior.tau

    def spike_weights(self) -> np.ndarray:
        """Per-coordinate spike weight; NaN marks flat-prior scaling coefficients."""
        p = np.full(self.plan.M, np.nan)
        for j in self.plan.levels:
            p[2**j : 2 ** (j + 1)] = self.prior.p_at(j, self.plan.J0)
        return p


def _vec(x, M: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (M,):
        raise InvalidInputError(f"{what} must have shape ({M},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{what} contains non-finite values")
    return v


def log_likelihood(theta, d, model: GammaModel) -> float:
    """Gamma log-likelihood of the time-domain residual ``W'(d - theta)``."""
    M = model.plan.M
    r = idwt(_vec(d, M, "d") - _vec(theta, M, "theta"), model.plan)
    if np.any(r <= 0):
        return -math.inf
    a, b = model.gamma.shape, model.gamma.rate
    return float(M * (a * math.log(b) - gammaln(a)) - b * r.sum() + (a - 1.0) * np.log(r).sum())


def log_prior(theta, model: GammaModel) -> float:
    """Spike-and-slab log prior on detail coordinates; flat on scaling ones."""
    theta = _vec(theta, model.plan.M, "theta")
    p = model.spike_weights()
    det = ~np.isnan(p)
    t, p = theta[det], p[det]
    slab = log_logistic_density(t, model.prior.tau)
    total = 0.0
    pure = p == 0
    total += slab[pure].sum()
    if (~pure).any():
        spike = log_logistic_density(t[~pure], model.spike_scale)
        total += np.logaddexp(np.log(p[~pure]) + spike, np.log1p(-p[~pure]) + slab[~pure]).sum()
    return float(total)


def log_posterior(theta, d, model: GammaModel) -> float:
    """Unnormalized log posterior; ``-inf`` outside the support."""
    ll = log_likelihood(theta, d, model)
    if ll == -math.inf:
        return ll
    return log_prior(theta, model) + ll


def feasible_init(d, model: GammaModel, margin: float | None = None) -> np.ndarray:
    """Starting point whose time-domain residual is the constant ``margin``.

    Defaults to the noise mean ``a / b``.
    """
    c = model.gamma.mean if margin is None else float(margin)
    if not c > 0:
        raise InvalidInputError(f"margin must be positive, got {c}")
    d = _vec(d, model.plan.M, "d")
    return d - dwt(np.full(model.plan.M, c), model.plan)


def gamma_moment_estimate(residuals) -> GammaNoiseSpec:
    """Moment-matched ``(a, b)`` from positive residuals (a convenience, not a fit)."""
    r = np.asarray(residuals, dtype=float).ravel()
    m, v = r.mean(), r.var()
    if not (m > 0 and v > 0):
        raise InvalidInputError("residuals must have positive mean and variance")
    return GammaNoiseSpec(shape=m * m / v, rate=m / v)


@numba.njit(cache=True, nogil=True)
def _log_post_kernel(theta, args):
    d, Wt, a, b, const, lp_spike, lp_slab, detail, tau, spike_tau = args
    M = theta.shape[0]
    diff = d - theta
    sum_r = 0.0
    sum_log = 0.0
    for i in range(M):
        r = 0.0
        for k in range(M):
            r += Wt[i, k] * diff[k]
        if not r > 0.0:
            return -np.inf
        sum_r += r
        sum_log += math.log(r)
    out = const - b * sum_r + (a - 1.0) * sum_log
    log_tau = math.log(tau)
    log_spike_tau = math.log(spike_tau)
    for i in range(M):
        if detail[i]:
            z = abs(theta[i]) / tau
            slab = lp_slab[i] - z - log_tau - 2.0 * math.log1p(math.exp(-z))
            if lp_spike[i] == -np.inf:
                out += slab
            else:
                zs = abs(theta[i]) / spike_tau
                spike = lp_spike[i] - zs - log_spike_tau - 2.0 * math.log1p(math.exp(-zs))
                hi = max(spike, slab)
                out += hi + math.log(math.exp(spike - hi) + math.exp(slab - hi))
    return out


def compiled_target(d, model: GammaModel, W: np.ndarray | None = None):
    """``(kernel, args)`` pair evaluating :func:`log_posterior` in compiled code."""
    M = model.plan.M
    d = _vec(d, M, "d")
    if W is None:
        W = build_transform_matrix(model.plan)
    a, b = model.gamma.shape, model.gamma.rate
    p = model.spike_weights()
    detail = ~np.isnan(p)
    with np.errstate(divide="ignore"):
        lp_spike = np.where(detail & (p > 0), np.log(np.where(detail, p, 1.0)), -np.inf)
        lp_slab = np.where(detail, np.log1p(-np.where(detail, p, 0.0)), 0.0)
    args = (
        d.copy(),
        np.ascontiguousarray(W.T),
        float(a),
        float(b),
        float(M * (a * math.log(b) - gammaln(a))),
        lp_spike,
        lp_slab,
        detail,
        float(model.prior.tau),
        float(model.spike_scale),
    )
    return _log_post_kernel, args


def shrink_panel_gamma(D, model: GammaModel, config: RamConfig, seed) -> tuple[np.ndarray, list[ChainResult]]:
    """Posterior mean of every column of ``D``, one RAM chain per column.

    Column ``n`` uses the RNG stream derived from ``(seed, n)``. When the
    config leaves ``initial_scale`` unset the chains start with
    ``S = sd(noise) / sqrt(M) * I``.
    """
    D = np.asarray(D, dtype=float)
    M, N = D.shape
    if M != model.plan.M:
        raise InvalidInputError(f"panel has {M} rows, plan expects {model.plan.M}")
    if config.initial_scale is None:
        config = dataclasses.replace(
            config, initial_scale=model.gamma.marginal_sd / math.sqrt(M)
        )
    W = build_transform_matrix(model.plan)
    out = np.empty_like(D)
    results = []
    for n, rng in enumerate(column_rngs(seed, N)):
        kernel, args = compiled_target(D[:, n], model, W)
        res = run_chain_compiled(kernel, args, feasible_init(D[:, n], model), config, rng)
        out[:, n] = posterior_mean(res.samples)
        results.append(res)
    return out, results
