"""Random error generators: iid Gamma, iid Gaussian, AR(1) and ARFIMA(0,d,0).

Every generator draws column ``n`` of an ``(M, N)`` panel from its own RNG
stream derived from ``(seed, n)``, so panels are reproducible and a column's
values do not depend on how many other columns are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numba
import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

from .errors import InvalidInputError

__all__ = [
    "GammaNoiseSpec",
    "NormalNoiseSpec",
    "Ar1NoiseSpec",
    "ArfimaNoiseSpec",
    "NoNoiseSpec",
    "NoiseSpec",
    "NOISE_FAMILIES",
    "column_rngs",
    "arfima_pi_coeffs",
    "arfima_autocovariance",
    "gen_gamma_panel",
    "gen_normal_panel",
    "gen_ar1_panel",
    "gen_arfima_panel",
    "generate_panel",
    "snr_calibrate",
]

SeedLike = Union[int, np.random.SeedSequence]


def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def column_rngs(seed: SeedLike, n: int) -> list[np.random.Generator]:
    """One independent generator per column, keyed by column index."""
    base = _seed_sequence(seed)
    return [
        np.random.default_rng(
            np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + (i,))
        )
        for i in range(n)
    ]


@dataclass(frozen=True)
class GammaNoiseSpec:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise InvalidInputError(f"Gamma shape and rate must be positive, got {self}")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def marginal_sd(self) -> float:
        return math.sqrt(self.shape) / self.rate


@dataclass(frozen=True)
class NormalNoiseSpec:
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise InvalidInputError(f"noise sd must be positive, got {self.sd}")

    @property
    def marginal_sd(self) -> float:
        return self.sd


@dataclass(frozen=True)
class Ar1NoiseSpec:
    phi: float
    innovation_sd: float

    def __post_init__(self):
        if not -1 < self.phi < 1:
            raise InvalidInputError(f"AR(1) coefficient must satisfy |phi| < 1, got {self.phi}")
        if not self.innovation_sd > 0:
            raise InvalidInputError(f"innovation sd must be positive, got {self.innovation_sd}")

    @property
    def marginal_sd(self) -> float:
        return self.innovation_sd / math.sqrt(1.0 - self.phi**2)


def _check_d(d: float) -> None:
    if not 0 < d < 0.5:
        raise InvalidInputError(f"memory parameter d must lie in (0, 0.5), got {d}")


@dataclass(frozen=True)
class ArfimaNoiseSpec:
    d: float
    innovation_sd: float
    truncation_Q: int = 100

    def __post_init__(self):
        _check_d(self.d)
        if not self.innovation_sd > 0:
            raise InvalidInputError(f"innovation sd must be positive, got {self.innovation_sd}")

    @property
    def marginal_sd(self) -> float:
        d = self.d
        return self.innovation_sd * math.exp(0.5 * gammaln(1 - 2 * d) - gammaln(1 - d))


@dataclass(frozen=True)
class NoNoiseSpec:
    """Degenerate zero noise, for exactness checks."""

    @property
    def marginal_sd(self) -> float:
        return 0.0


NoiseSpec = Union[GammaNoiseSpec, NormalNoiseSpec, Ar1NoiseSpec, ArfimaNoiseSpec, NoNoiseSpec]
NOISE_FAMILIES = ("gamma", "normal", "ar1", "arfima", "none")


def arfima_pi_coeffs(d: float, Q: int) -> np.ndarray:
    """Coefficients ``b_0..b_Q`` of the expansion ``(1 - B)^d = sum_q b_q B^q``.

    Uses ``b_q = b_{q-1} (q - 1 - d) / q``, which equals
    ``Gamma(q - d) / (Gamma(q + 1) Gamma(-d))`` without overflow.
    """
    _check_d(d)
    if Q < 0:
        raise InvalidInputError(f"Q must be non-negative, got {Q}")
    q = np.arange(1, Q + 1)
    return np.concatenate([[1.0], np.cumprod((q - 1 - d) / q)])


def arfima_autocovariance(d: float, sd: float, n: int) -> np.ndarray:
    """Autocovariances ``gamma(0..n-1)`` of ARFIMA(0,d,0) with innovation sd ``sd``."""
    _check_d(d)
    g0 = sd**2 * math.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    k = np.arange(1, n)
    return g0 * np.concatenate([[1.0], np.cumprod((k - 1 + d) / (k - d))])


@numba.njit(cache=True, nogil=True)
def _levinson_paths(acvf, z):
    """Durbin-Levinson recursion; ``z`` is (N, n) standard normal innovations."""
    N, n = z.shape
    x = np.empty((N, n))
    phi = np.zeros(n)
    prev = np.zeros(n)
    v = acvf[0]
    for j in range(N):
        x[j, 0] = math.sqrt(v) * z[j, 0]
    for t in range(1, n):
        acc = acvf[t]
        for k in range(1, t):
            acc -= prev[k] * acvf[t - k]
        ptt = acc / v
        for k in range(1, t):
            phi[k] = prev[k] - ptt * prev[t - k]
        phi[t] = ptt
        v = v * (1.0 - ptt * ptt)
        sv = math.sqrt(v)
        for j in range(N):
            s = 0.0
            for k in range(1, t + 1):
                s += phi[k] * x[j, t - k]
            x[j, t] = s + sv * z[j, t]
        for k in range(1, t + 1):
            prev[k] = phi[k]
    return x


def _standard_normals(dims, seed) -> np.ndarray:
    M, N = dims
    return np.column_stack([rng.standard_normal(M) for rng in column_rngs(seed, N)]).reshape(M, N)


def gen_gamma_panel(spec: GammaNoiseSpec, dims, seed: SeedLike) -> np.ndarray:
    """iid ``Gamma(shape, rate)`` panel of shape ``dims``."""
    M, N = dims
    cols = [rng.gamma(spec.shape, 1.0 / spec.rate, size=M) for rng in column_rngs(seed, N)]
    return np.column_stack(cols).reshape(M, N)


def gen_normal_panel(spec: NormalNoiseSpec, dims, seed: SeedLike) -> np.ndarray:
    return spec.sd * _standard_normals(dims, seed)


def gen_ar1_panel(spec: Ar1NoiseSpec, dims, seed: SeedLike) -> np.ndarray:
    """Stationary AR(1) columns started from the stationary law."""
    e = spec.innovation_sd * _standard_normals(dims, seed)
    e[0] = e[0] / math.sqrt(1.0 - spec.phi**2)
    return lfilter([1.0], [1.0, -spec.phi], e, axis=0)


def gen_arfima_panel(spec: ArfimaNoiseSpec, dims, seed: SeedLike) -> np.ndarray:
    """Exact-covariance ARFIMA(0,d,0) columns via the Durbin-Levinson recursion."""
    M, N = dims
    z = _standard_normals(dims, seed)
    acvf = arfima_autocovariance(spec.d, spec.innovation_sd, M)
    return _levinson_paths(acvf, np.ascontiguousarray(z.T)).T.copy()


def generate_panel(spec: NoiseSpec, dims, seed: SeedLike) -> np.ndarray:
    """Dispatch to the generator matching ``spec``."""
    if isinstance(spec, GammaNoiseSpec):
        return gen_gamma_panel(spec, dims, seed)
    if isinstance(spec, NormalNoiseSpec):
        return gen_normal_panel(spec, dims, seed)
    if isinstance(spec, Ar1NoiseSpec):
        return gen_ar1_panel(spec, dims, seed)
    if isinstance(spec, ArfimaNoiseSpec):
        return gen_arfima_panel(spec, dims, seed)
    if isinstance(spec, NoNoiseSpec):
        return np.zeros(dims)
    raise InvalidInputError(f"unsupported noise spec {spec!r}")


def snr_calibrate(
    family: str,
    target_signal,
    snr: float,
    *,
    shape: float = 2.0,
    phi: float | None = None,
    d: float | None = None,
    truncation_Q: int = 100,
    scale_override: float | None = None,
    reference: str = "marginal",
) -> NoiseSpec:
    """Noise spec whose sd equals ``sd(target_signal) / snr``.

    Parameters
    ----------
    family : {"gamma", "normal", "ar1", "arfima", "none"}
    target_signal : array_like
        The curve defining the signal scale (the mean aggregated curve).
    snr : float
        Ratio of signal sd to noise sd.
    shape, phi, d, truncation_Q
        Fixed family parameters. For Gamma the shape is held and the rate
        solved for.
    scale_override : float, optional
        Use this noise sd directly and ignore ``target_signal`` / ``snr``.
    reference : {"marginal", "innovation"}
        Which sd is matched for the correlated families: the marginal sd of
        the process (default) or the sd of its white-noise innovations.
        The two coincide for Gamma and normal noise.
    """
    if reference not in ("marginal", "innovation"):
        raise InvalidInputError(f"reference must be 'marginal' or 'innovation', got {reference!r}")
    if family == "none":
        return NoNoiseSpec()
    if family not in NOISE_FAMILIES:
        raise InvalidInputError(f"unknown noise family {family!r}; choose from {NOISE_FAMILIES}")
    if scale_override is not None:
        if not scale_override > 0:
            raise InvalidInputError(f"scale override must be positive, got {scale_override}")
        sigma = float(scale_override)
    else:
        if not snr > 0:
            raise InvalidInputError(f"SNR must be positive, got {snr}")
        s = float(np.std(np.asarray(target_signal, dtype=float)))
        if not s > 0:
            raise InvalidInputError("target signal is constant; SNR is undefined")
        sigma = s / snr
    if family == "gamma":
        return GammaNoiseSpec(shape=shape, rate=math.sqrt(shape) / sigma)
    if family == "normal":
        return NormalNoiseSpec(sd=sigma)
    if family == "ar1":
        if phi is None:
            raise InvalidInputError("AR(1) calibration needs phi")
        if not -1 < phi < 1:
            raise InvalidInputError(f"AR(1) coefficient must satisfy |phi| < 1, got {phi}")
        if reference == "innovation":
            return Ar1NoiseSpec(phi=phi, innovation_sd=sigma)
        return Ar1NoiseSpec(phi=phi, innovation_sd=sigma * math.sqrt(1.0 - phi**2))
    if d is None:
        raise InvalidInputError("ARFIMA calibration needs d")
    _check_d(d)
    if reference == "innovation":
        return ArfimaNoiseSpec(d=d, innovation_sd=sigma, truncation_Q=truncation_Q)
    sd = sigma * math.exp(gammaln(1 - d) - 0.5 * gammaln(1 - 2 * d))
    return ArfimaNoiseSpec(d=d, innovation_sd=sd, truncation_Q=truncation_Q)
