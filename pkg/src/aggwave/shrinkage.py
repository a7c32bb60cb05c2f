"""Level-dependent Bayesian shrinkage for correlated noise, plus the
universal soft-threshold comparator.

The Bayesian rule is the posterior mean of a coefficient under a
spike-at-zero / logistic-slab prior and a Gaussian likelihood with
level-specific scale ``sigma_j``::

    delta(d) = (1-p) E_u[(s u + d) g(s u + d)] / ((p/s) phi(d/s) + (1-p) E_u[g(s u + d)])

with ``u ~ N(0, 1)``. Both expectations are evaluated by Gauss-Hermite
quadrature in log space, so the rule is finite for any finite ``d``.
"""

from __future__ import annotations

import functools
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import InvalidInputError
from .wavelets import TransformPlan, level_slice, mad_sigma_level

__all__ = [
    "PriorConfig",
    "logistic_density",
    "log_logistic_density",
    "p_of_level",
    "shrink_coefficient",
    "shrink_panel_level_dependent",
    "soft_threshold",
    "universal_soft_threshold",
    "GH_NODES",
]

log = logging.getLogger(__name__)

GH_NODES = 64
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PriorConfig:
    """Spike-and-slab hyperparameters.

    ``p`` fixes the spike weight at every level; when it is ``None`` the
    level rule ``p(j) = 1 - (j - J0 + 1)**(-h)`` is used instead.
    """

    p: float | None = None
    h: float = 2.0
    tau: float = 5.0

    def __post_init__(self):
        if self.p is not None and not 0 <= self.p < 1:
            raise InvalidInputError(f"fixed spike weight must lie in [0, 1), got {self.p}")
        if not self.h > 0:
            raise InvalidInputError(f"h must be positive, got {self.h}")
        if not self.tau > 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau}")
        if self.tau > 10:
            warnings.warn(f"logistic scale tau={self.tau} is outside the usual range (0, 10]")

    def p_at(self, j: int, J0: int) -> float:
        if self.p is not None:
            return self.p
        return p_of_level(j, J0, self.h)


def log_logistic_density(x, tau: float) -> np.ndarray:
    """Log of the zero-centred logistic density with scale ``tau``."""
    if not tau > 0:
        raise InvalidInputError(f"logistic scale must be positive, got {tau}")
    z = np.abs(np.asarray(x, dtype=float)) / tau
    return -z - math.log(tau) - 2.0 * np.log1p(np.exp(-z))


def logistic_density(x, tau: float):
    """``exp(-x/tau) / (tau (1 + exp(-x/tau))**2)``, evaluated stably."""
    out = np.exp(log_logistic_density(x, tau))
    return float(out) if np.ndim(out) == 0 else out


def p_of_level(j: int, J0: int, h: float) -> float:
    """Spike weight ``1 - 1/(j - J0 + 1)**h`` for detail level ``j``."""
    if j < J0:
        raise InvalidInputError(f"level {j} is below the primary resolution level {J0}")
    if not h > 0:
        raise InvalidInputError(f"h must be positive, got {h}")
    return 1.0 - 1.0 / (j - J0 + 1) ** h


@functools.lru_cache(maxsize=8)
def _half_rule(n: int):
    """Positive Gauss-Hermite nodes and their weights, normalized to N(0,1)."""
    if n < 2 or n % 2:
        raise InvalidInputError(f"node count must be an even integer >= 2, got {n}")
    x, w = hermegauss(n)
    keep = x > 0
    return x[keep], w[keep] / math.sqrt(2.0 * math.pi)


def shrink_coefficient(d, sigma, p: float, tau: float, nodes: int = GH_NODES):
    """Posterior-mean shrinkage of empirical coefficient(s) ``d``.

    Parameters
    ----------
    d : array_like
        Empirical coefficients.
    sigma : array_like
        Noise scale(s), broadcastable against ``d``; must be positive.
    p : float
        Spike weight in ``[0, 1]``.
    tau : float
        Logistic slab scale.
    nodes : int
        Gauss-Hermite node count (even).
    """
    d = np.asarray(d, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("coefficients must be finite")
    if not np.all(sigma > 0):
        raise InvalidInputError("noise scale must be positive")
    if not 0 <= p <= 1:
        raise InvalidInputError(f"spike weight must lie in [0, 1], got {p}")
    if p == 1:
        return np.zeros(np.broadcast(d, sigma).shape)[()]
    d, sigma = np.broadcast_arrays(d, sigma)
    sign = np.sign(d)
    a = np.abs(d)[..., None]
    s = sigma[..., None]
    u, w = _half_rule(nodes)
    logw = np.log(w)
    xp = a + s * u
    xm = a - s * u
    lp = logw + log_logistic_density(xp, tau)
    lm = logw + log_logistic_density(xm, tau)
    top = np.maximum(lp.max(axis=-1), lm.max(axis=-1))
    if p > 0:
        z = np.abs(d) / sigma
        log_spike = math.log(p) - np.log(sigma) - _LOG_SQRT_2PI - 0.5 * z * z
        top = np.maximum(top, log_spike)
        spike = np.exp(log_spike - top)
    else:
        spike = 0.0
    ep = np.exp(lp - top[..., None])
    em = np.exp(lm - top[..., None])
    i0 = (ep + em).sum(axis=-1)
    i1 = (xp * ep + xm * em).sum(axis=-1)
    out = sign * (1.0 - p) * i1 / (spike + (1.0 - p) * i0)
    return out[()] if out.ndim == 0 else out


def shrink_panel_level_dependent(D, plan: TransformPlan, prior: PriorConfig,
                                 nodes: int = GH_NODES) -> np.ndarray:
    """Apply the Bayesian rule level by level, column by column.

    Scaling coefficients pass through. A level whose MAD scale is zero in
    some column is left unchanged in that column.
    """
    D = np.asarray(D, dtype=float)
    vector = D.ndim == 1
    panel = D[:, None] if vector else D
    out = panel.copy()
    for j in plan.levels:
        sl = level_slice(plan, j)
        sig = np.atleast_1d(mad_sigma_level(panel, plan, j))
        ok = sig > 0
        if not ok.all():
            log.warning("level %d: zero MAD scale in %d column(s); left unshrunk", j, int((~ok).sum()))
        if ok.any():
            block = panel[sl][:, ok]
            out[sl, ok] = shrink_coefficient(block, sig[ok][None, :], prior.p_at(j, plan.J0),
                                             prior.tau, nodes)
    return out[:, 0] if vector else out


def soft_threshold(x, lam):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def universal_soft_threshold(D, plan: TransformPlan) -> np.ndarray:
    """Soft-threshold each detail level at ``sigma_j * sqrt(2 log M)``."""
    D = np.asarray(D, dtype=float)
    vector = D.ndim == 1
    panel = D[:, None] if vector else D
    out = panel.copy()
    factor = math.sqrt(2.0 * math.log(plan.M))
    for j in plan.levels:
        sl = level_slice(plan, j)
        sig = np.atleast_1d(mad_sigma_level(panel, plan, j))
        if not (sig > 0).all():
            log.warning("level %d: zero MAD scale in some column; threshold is zero there", j)
        out[sl] = soft_threshold(panel[sl], factor * sig[None, :])
    return out[:, 0] if vector else out
