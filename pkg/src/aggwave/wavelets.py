"""Periodized orthonormal discrete wavelet transform.

Coefficient layout
------------------
For a signal of length ``M = 2**J`` and primary resolution level ``J0`` the
coefficient vector is laid out coarse to fine::

    [ scaling (2**J0) | detail J0 (2**J0) | detail J0+1 (2**(J0+1)) | ... | detail J-1 (2**(J-1)) ]

so the detail block of level ``j`` occupies the index range
``[2**j, 2**(j+1))`` and the scaling block occupies ``[0, 2**J0)``.

All transforms accept either a length-M vector or an ``(M, N)`` panel and
act on axis 0 (one transform per column).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import InvalidInputError, ResourceLimitError

__all__ = [
    "TransformPlan",
    "daubechies_filter",
    "dwt",
    "idwt",
    "build_transform_matrix",
    "level_slice",
    "mad_sigma_level",
    "MAX_MATRIX_SIZE",
    "FILTERS",
]

MAX_MATRIX_SIZE = 4096
MAD_CONSTANT = 0.6745

#: Names accepted by :class:`TransformPlan`. ``identity`` is a test hook
#: (W = I) that keeps the level layout but performs no transform.
FILTERS = ("haar",) + tuple(f"db{n}" for n in range(1, 11)) + ("identity",)


@functools.lru_cache(maxsize=None)
def daubechies_filter(vanishing_moments: int) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``N`` vanishing moments.

    Built by spectral factorization of the half-band polynomial
    ``P(y) = sum_k C(N-1+k, k) y**k`` with ``y = sin^2(w/2)``. The result has
    ``2N`` taps, sums to ``sqrt(2)`` and has unit energy.
    """
    n = int(vanishing_moments)
    if n < 1 or n > 10:
        raise InvalidInputError(f"Daubechies order must be in 1..10, got {n}")
    # ((1 + z)/2)**n factor
    h = np.array([1.0])
    for _ in range(n):
        h = np.convolve(h, [0.5, 0.5])
    if n > 1:
        # roots in y of P, highest power first for np.roots
        pcoef = [comb(n - 1 + k, k, exact=True) for k in range(n)][::-1]
        for y in np.roots(pcoef):
            # y = (2 - z - 1/z)/4  <=>  z**2 - (2 - 4y) z + 1 = 0
            zs = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            z = zs[np.argmin(np.abs(zs))]
            h = np.convolve(h, [-z, 1.0]) / (1.0 - z)
        h = np.real(h)
    h = h * (math.sqrt(2.0) / h.sum())
    return h[::-1].copy()


@dataclass(frozen=True)
class TransformPlan:
    """Immutable description of a periodized DWT.

    Parameters
    ----------
    M : int
        Signal length, a power of two.
    J0 : int
        Primary (coarsest) resolution level, ``0 <= J0 < log2(M)``.
    filter : str
        ``"haar"``, ``"db1"`` .. ``"db10"`` (Daubechies by number of vanishing
        moments) or ``"identity"``.
    """

    M: int
    J0: int = 3
    filter: str = "db8"

    def __post_init__(self):
        M = int(self.M)
        if M < 2 or M & (M - 1):
            raise InvalidInputError(f"signal length must be a power of two >= 2, got {self.M}")
        J = M.bit_length() - 1
        if not 0 <= int(self.J0) < J:
            raise InvalidInputError(f"J0 must satisfy 0 <= J0 < J={J}, got {self.J0}")
        if self.filter not in FILTERS:
            raise InvalidInputError(
                f"unknown wavelet filter {self.filter!r}; choose from {', '.join(FILTERS)}"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "J0", int(self.J0))

    @property
    def J(self) -> int:
        return self.M.bit_length() - 1

    @property
    def levels(self) -> range:
        """Detail levels ``J0 .. J-1``."""
        return range(self.J0, self.J)

    @property
    def lowpass(self) -> np.ndarray:
        if self.filter == "haar":
            return daubechies_filter(1)
        return daubechies_filter(int(self.filter[2:]))

    @property
    def highpass(self) -> np.ndarray:
        h = self.lowpass
        return ((-1.0) ** np.arange(h.size)) * h[::-1]

    def detail_mask(self) -> np.ndarray:
        """Boolean length-M mask, True on detail coefficients."""
        mask = np.ones(self.M, dtype=bool)
        mask[: 2**self.J0] = False
        return mask

    def level_of_index(self) -> np.ndarray:
        """Level of each coefficient; scaling coefficients are tagged ``J0 - 1``."""
        lev = np.full(self.M, self.J0 - 1, dtype=int)
        for j in self.levels:
            lev[level_slice(self, j)] = j
        return lev


def level_slice(plan: TransformPlan, j: int) -> slice:
    """Index range of the detail block of level ``j``."""
    if not plan.J0 <= j < plan.J:
        raise InvalidInputError(f"level {j} outside detail range [{plan.J0}, {plan.J - 1}]")
    return slice(2**j, 2 ** (j + 1))


def _as_panel(x, plan: TransformPlan, what: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise InvalidInputError(f"{what} must be a vector or a 2-D panel, got ndim={arr.ndim}")
    n = arr.shape[0]
    if n < 1 or n & (n - 1):
        raise InvalidInputError(f"{what} length {n} is not a power of two")
    if n != plan.M:
        raise InvalidInputError(f"{what} length {n} does not match plan length {plan.M}")
    vector = arr.ndim == 1
    return (arr[:, None] if vector else arr), vector


def _analysis_step(a: np.ndarray, h: np.ndarray, g: np.ndarray):
    n = a.shape[0]
    half = n // 2
    base = 2 * np.arange(half)
    approx = np.zeros((half,) + a.shape[1:])
    detail = np.zeros_like(approx)
    for i in range(h.size):
        rows = a[(base + i) % n]
        approx += h[i] * rows
        detail += g[i] * rows
    return approx, detail


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, h: np.ndarray, g: np.ndarray):
    half = approx.shape[0]
    n = 2 * half
    base = 2 * np.arange(half)
    out = np.zeros((n,) + approx.shape[1:])
    for i in range(h.size):
        # indices are distinct for fixed i, so fancy-index accumulation is safe
        out[(base + i) % n] += h[i] * approx + g[i] * detail
    return out


def dwt(signal, plan: TransformPlan) -> np.ndarray:
    """Forward transform ``W @ signal`` (column-wise for panels)."""
    x, vector = _as_panel(signal, plan, "signal")
    if plan.filter == "identity":
        out = x.copy()
    else:
        h, g = plan.lowpass, plan.highpass
        out = np.empty_like(x)
        a = x
        for j in range(plan.J - 1, plan.J0 - 1, -1):
            a, d = _analysis_step(a, h, g)
            out[2**j : 2 ** (j + 1)] = d
        out[: 2**plan.J0] = a
    return out[:, 0] if vector else out


def idwt(coeffs, plan: TransformPlan) -> np.ndarray:
    """Inverse transform ``W' @ coeffs`` (column-wise for panels)."""
    c, vector = _as_panel(coeffs, plan, "coefficient vector")
    if plan.filter == "identity":
        out = c.copy()
    else:
        h, g = plan.lowpass, plan.highpass
        a = c[: 2**plan.J0]
        for j in plan.levels:
            a = _synthesis_step(a, c[2**j : 2 ** (j + 1)], h, g)
        out = a
    return out[:, 0] if vector else out


def build_transform_matrix(plan: TransformPlan) -> np.ndarray:
    """Materialize ``W`` so that ``W @ x == dwt(x, plan)``.

    Intended as a test oracle and for small dense computations; refuses
    ``M > 4096``.
    """
    if plan.M > MAX_MATRIX_SIZE:
        raise ResourceLimitError(
            f"refusing to build a {plan.M}x{plan.M} transform matrix (limit {MAX_MATRIX_SIZE})"
        )
    # columns of W are dwt(e_i)
    return dwt(np.eye(plan.M), plan)


def mad_sigma_level(coeffs, plan: TransformPlan, j: int) -> np.ndarray | float:
    """Robust noise scale of detail level ``j``: ``median|d_jk| / 0.6745``.

    For a panel a vector with one estimate per column is returned.
    """
    c, vector = _as_panel(coeffs, plan, "coefficient vector")
    block = np.abs(c[level_slice(plan, j)])
    sigma = np.median(block, axis=0) / MAD_CONSTANT
    return float(sigma[0]) if vector else sigma
