"""Robust Adaptive Metropolis (RAM) sampler.

The proposal is ``theta + S U`` with ``U ~ N(0, I)``. After each step the
lower-triangular factor is adapted so that::

    S_k S_k' = S_{k-1} (I + eta_k (alpha_k - gamma) U U' / |U|^2) S_{k-1}'

which is a rank-one Cholesky update (``alpha_k > gamma``) or downdate
(``alpha_k < gamma``) of ``S S'`` with vector ``S U / |U|``.

Two drivers share one random stream layout (per chunk: a block of normals,
then a block of uniforms) and therefore produce the same chain:

* :func:`run_chain` takes any Python callable as the log target;
* :func:`run_chain_compiled` takes a numba-jitted log target and runs the
  whole loop in compiled code.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .errors import InvalidInputError, SamplerInitError

__all__ = [
    "RamConfig",
    "RamState",
    "ChainResult",
    "chol_rank1",
    "adapt_factor",
    "ram_step",
    "run_chain",
    "run_chain_compiled",
    "posterior_mean",
]

log = logging.getLogger(__name__)

_CHUNK = 1024


@dataclass(frozen=True)
class RamConfig:
    """Sampler settings.

    ``iterations`` counts samples including the initial point, so a chain
    performs ``iterations - 1`` Metropolis steps. ``initial_scale=None``
    means ``2.38 / sqrt(dim)``, the random-walk optimum for a unit-variance
    target. ``adapt=False`` freezes the proposal factor
    (``eta = 0``), giving a plain random-walk Metropolis sampler.
    """

    iterations: int = 5000
    target_acceptance: float = 0.234
    zeta: float = 2.0 / 3.0
    initial_scale: float | None = None
    burn_in: float = 0.2
    thin: int = 10
    seed: int = 0
    adapt: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInputError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 < self.target_acceptance < 1:
            raise InvalidInputError(f"target acceptance must lie in (0, 1), got {self.target_acceptance}")
        if not 0.5 < self.zeta <= 1:
            raise InvalidInputError(f"zeta must lie in (0.5, 1], got {self.zeta}")
        if self.initial_scale is not None and not self.initial_scale > 0:
            raise InvalidInputError(f"initial scale must be positive, got {self.initial_scale}")
        if not 0 <= self.burn_in < 1:
            raise InvalidInputError(f"burn-in fraction must lie in [0, 1), got {self.burn_in}")
        if self.thin < 1:
            raise InvalidInputError(f"thinning stride must be >= 1, got {self.thin}")

    def eta(self, k: int) -> float:
        return min(1.0, k ** (-self.zeta)) if self.adapt else 0.0

    def scale_for(self, dim: int) -> float:
        return self.initial_scale if self.initial_scale is not None else 2.38 / math.sqrt(dim)

    @property
    def burn(self) -> int:
        """Number of leading samples discarded as burn-in."""
        return int(self.burn_in * self.iterations)

    def retained_indices(self) -> np.ndarray:
        """1-based sample indices kept after burn-in and thinning."""
        return np.arange(self.burn + 1, self.iterations + 1, self.thin)


@dataclass
class RamState:
    theta: np.ndarray
    S: np.ndarray
    log_target: float
    k: int = 1
    accepted: int = 0
    accepted_after_burn: int = 0
    skipped_adaptations: int = 0

    @classmethod
    def initial(cls, theta, log_target_value: float, scale: float) -> "RamState":
        theta = np.array(theta, dtype=float)
        return cls(theta=theta, S=scale * np.eye(theta.size), log_target=float(log_target_value))


@dataclass
class ChainResult:
    samples: np.ndarray
    acceptance_rate: float
    final_diag: np.ndarray
    skipped_adaptations: int
    seed: int
    iterations: int
    post_burn_acceptance_rate: float = float("nan")
    extra: dict = field(default_factory=dict)

    def diagnostics(self) -> dict:
        return {
            "acceptance_rate": self.acceptance_rate,
            "post_burn_acceptance_rate": self.post_burn_acceptance_rate,
            "retained": int(self.samples.shape[0]),
            "iterations": self.iterations,
            "seed": self.seed,
            "skipped_adaptations": self.skipped_adaptations,
            "final_S_diagonal": [float(v) for v in self.final_diag],
        }

    def to_json(self) -> str:
        return json.dumps(self.diagnostics(), sort_keys=True)


@numba.njit(cache=True, nogil=True)
def chol_rank1(L, x, sign):
    """In place ``L L' + sign x x'`` for lower-triangular ``L``.

    ``x`` is overwritten. Returns False (with ``L`` partially modified) if a
    downdate would lose positive definiteness; callers pass copies.
    """
    n = L.shape[0]
    for k in range(n):
        lkk = L[k, k]
        r2 = lkk * lkk + sign * x[k] * x[k]
        if not r2 > 0.0:
            return False
        r = math.sqrt(r2)
        c = r / lkk
        s = x[k] / lkk
        L[k, k] = r
        for i in range(k + 1, n):
            L[i, k] = (L[i, k] + sign * s * x[i]) / c
            x[i] = c * x[i] - s * L[i, k]
    return True


@numba.njit(cache=True, nogil=True)
def _adapt(S, u, coef):
    n = u.shape[0]
    norm2 = 0.0
    for i in range(n):
        norm2 += u[i] * u[i]
    if coef == 0.0 or norm2 == 0.0:
        return S, True
    scale = math.sqrt(abs(coef) / norm2)
    x = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(i + 1):
            acc += S[i, j] * u[j]
        x[i] = scale * acc
    S_new = S.copy()
    ok = chol_rank1(S_new, x, 1.0 if coef > 0 else -1.0)
    if ok:
        return S_new, True
    return S, False


def adapt_factor(S, u, eta: float, alpha: float, gamma: float) -> tuple[np.ndarray, bool]:
    """New factor satisfying the RAM identity; ``(S, False)`` if the downdate fails."""
    return _adapt(np.ascontiguousarray(S, dtype=float), np.asarray(u, dtype=float),
                  float(eta * (alpha - gamma)))


def _advance(state: RamState, log_target, config: RamConfig, u, unif) -> RamState:
    k = state.k + 1
    proposal = state.theta + state.S @ u
    lp = float(log_target(proposal))
    delta = lp - state.log_target
    alpha = 1.0 if delta >= 0 else (math.exp(delta) if np.isfinite(lp) else 0.0)
    if unif < alpha:
        state.theta, state.log_target = proposal, lp
        state.accepted += 1
        if k > config.burn:
            state.accepted_after_burn += 1
    S, ok = adapt_factor(state.S, u, config.eta(k), alpha, config.target_acceptance)
    if not ok:
        state.skipped_adaptations += 1
        log.warning("RAM step %d: factor downdate failed; adaptation skipped", k)
    state.S = S
    state.k = k
    return state


def ram_step(state: RamState, log_target, config: RamConfig, rng: np.random.Generator) -> RamState:
    """One Metropolis step followed by the factor adaptation (mutates ``state``)."""
    u = rng.standard_normal(state.theta.size)
    unif = rng.random()
    return _advance(state, log_target, config, u, unif)


def _start(log_target_value: float, theta1, config: RamConfig) -> RamState:
    if not np.isfinite(log_target_value):
        raise SamplerInitError(
            "log target is not finite at the initial point; start from a feasible "
            "point (see gamma_posterior.feasible_init)"
        )
    theta1 = np.asarray(theta1, dtype=float)
    return RamState.initial(theta1, log_target_value, config.scale_for(theta1.size))


def _chunks(config: RamConfig, rng, dim):
    remaining = config.iterations - 1
    while remaining > 0:
        b = min(_CHUNK, remaining)
        yield rng.standard_normal((b, dim)), rng.random(b)
        remaining -= b


def _result(state: RamState, kept: np.ndarray, config: RamConfig) -> ChainResult:
    steps = max(config.iterations - 1, 1)
    post_steps = config.iterations - max(config.burn, 1)
    return ChainResult(
        samples=kept,
        acceptance_rate=state.accepted / steps if config.iterations > 1 else float("nan"),
        post_burn_acceptance_rate=state.accepted_after_burn / post_steps if post_steps > 0 else float("nan"),
        final_diag=np.diag(state.S).copy(),
        skipped_adaptations=state.skipped_adaptations,
        seed=config.seed,
        iterations=config.iterations,
    )


def run_chain(log_target, theta1, config: RamConfig, rng: np.random.Generator | None = None) -> ChainResult:
    """Run a RAM chain of ``config.iterations`` samples and keep the thinned tail."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    state = _start(float(log_target(np.asarray(theta1, dtype=float))), theta1, config)
    keep = config.retained_indices()
    out = np.empty((keep.size, state.theta.size))
    pos = 0
    if pos < keep.size and keep[pos] == 1:
        out[pos] = state.theta
        pos += 1
    for U, V in _chunks(config, rng, state.theta.size):
        for u, v in zip(U, V):
            _advance(state, log_target, config, u, v)
            if pos < keep.size and keep[pos] == state.k:
                out[pos] = state.theta
                pos += 1
    return _result(state, out, config)


@numba.njit(cache=True, nogil=True)
def _chain_chunk(target, args, theta, lp, S, k0, U, V, gamma, zeta, adapt, burn, thin, out, pos):
    dim = theta.shape[0]
    accepted = 0
    accepted_after_burn = 0
    skipped = 0
    prop = np.empty(dim)
    for b in range(U.shape[0]):
        k = k0 + b + 1
        u = U[b]
        for i in range(dim):
            acc = 0.0
            for j in range(i + 1):
                acc += S[i, j] * u[j]
            prop[i] = theta[i] + acc
        lp_new = target(prop, args)
        delta = lp_new - lp
        if delta >= 0.0:
            alpha = 1.0
        elif np.isfinite(lp_new):
            alpha = math.exp(delta)
        else:
            alpha = 0.0
        if V[b] < alpha:
            theta[:] = prop
            lp = lp_new
            accepted += 1
            if k > burn:
                accepted_after_burn += 1
        eta = min(1.0, k ** (-zeta)) if adapt else 0.0
        S_new, ok = _adapt(S, u, eta * (alpha - gamma))
        if ok:
            S[:, :] = S_new
        else:
            skipped += 1
        if k > burn and (k - burn - 1) % thin == 0 and pos < out.shape[0]:
            out[pos] = theta
            pos += 1
    return lp, accepted, accepted_after_burn, skipped, pos


def run_chain_compiled(target, args, theta1, config: RamConfig,
                       rng: np.random.Generator | None = None) -> ChainResult:
    """Compiled counterpart of :func:`run_chain`.

    ``target(theta, args)`` must be a numba-jitted function returning the
    log density (``-inf`` outside the support).
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    theta = np.array(theta1, dtype=float)
    state = _start(float(target(theta, args)), theta, config)
    keep = config.retained_indices()
    burn = config.burn
    out = np.empty((keep.size, theta.size))
    pos = 0
    if keep.size and keep[0] == 1:
        out[0] = theta
        pos = 1
    S = np.ascontiguousarray(state.S)
    lp = state.log_target
    k = 1
    for U, V in _chunks(config, rng, theta.size):
        lp, acc, acc_burn, skip, pos = _chain_chunk(
            target, args, theta, lp, S, k, U, V, config.target_acceptance, config.zeta,
            config.adapt, burn, config.thin, out, pos,
        )
        state.accepted += acc
        state.accepted_after_burn += acc_burn
        state.skipped_adaptations += skip
        k += U.shape[0]
    if state.skipped_adaptations:
        log.warning("RAM chain: %d adaptation(s) skipped after failed downdates",
                    state.skipped_adaptations)
    state.theta, state.S, state.log_target, state.k = theta, S, lp, k
    return _result(state, out, config)


def posterior_mean(samples) -> np.ndarray:
    """Coordinate-wise mean of retained draws."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("need at least one retained sample")
    return x.mean(axis=0)
