"""Aggregation model and the projection estimator of component curves.

The observed panel is ``A = alpha @ y + eps`` with ``A`` of shape (M, N),
components ``alpha`` (M, L) and known weights ``y`` (L, N). After a DWT the
component coefficients are estimated by ``delta(D) y' (y y')^{-1}`` and
mapped back with the inverse transform.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import IllConditionedWeightsError, InvalidInputError
from .wavelets import TransformPlan, idwt

__all__ = [
    "grid",
    "validate_weights",
    "aggregate_panel",
    "project_components",
    "reconstruct_components",
    "COND_LIMIT",
]

COND_LIMIT = 1e12


def grid(M: int) -> np.ndarray:
    """Equally spaced sample locations ``t_m = m / M``, ``m = 1..M``."""
    return np.arange(1, M + 1) / M


def validate_weights(weights, tol: float = 1e-12) -> np.ndarray:
    """Check that every weight column lies in the open simplex.

    Raises
    ------
    InvalidInputError
        Naming the first offending column (0-based) and the failed condition.
    """
    y = np.asarray(weights, dtype=float)
    if y.ndim != 2:
        raise InvalidInputError(f"weights must be an L x N matrix, got shape {y.shape}")
    L, N = y.shape
    if N < L:
        raise InvalidInputError(f"need at least as many samples as components (N={N} < L={L})")
    bad = np.flatnonzero(~((y > 0) & (y < 1)).all(axis=0)) if L > 1 else np.array([], int)
    if bad.size:
        col = int(bad[0])
        row = int(np.flatnonzero(~((y[:, col] > 0) & (y[:, col] < 1)))[0])
        raise InvalidInputError(
            f"weight entry (row {row}, column {col}) = {float(y[row, col])!r} is outside (0, 1)"
        )
    sums = y.sum(axis=0)
    off = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if off.size:
        col = int(off[0])
        raise InvalidInputError(f"weight column {col} sums to {float(sums[col])!r}, not 1")
    return y


def aggregate_panel(components, weights, noise) -> np.ndarray:
    """Return ``components @ weights + noise``."""
    alpha = np.asarray(components, dtype=float)
    y = np.asarray(weights, dtype=float)
    eps = np.asarray(noise, dtype=float)
    if alpha.ndim != 2 or y.ndim != 2 or eps.ndim != 2:
        raise InvalidInputError("components, weights and noise must all be 2-D")
    if alpha.shape[1] != y.shape[0] or eps.shape != (alpha.shape[0], y.shape[1]):
        raise InvalidInputError(
            f"incompatible shapes: components {alpha.shape}, weights {y.shape}, noise {eps.shape}"
        )
    return alpha @ y + eps


def project_components(shrunk_coeffs, weights, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Least-squares projection ``shrunk @ y' (y y')^{-1}``.

    ``y y'`` is factored by Cholesky after a condition-number check, so a
    singular or nearly singular weight matrix raises
    :class:`IllConditionedWeightsError` instead of returning garbage.
    """
    D = np.asarray(shrunk_coeffs, dtype=float)
    y = np.asarray(weights, dtype=float)
    if D.ndim != 2 or y.ndim != 2 or D.shape[1] != y.shape[1]:
        raise InvalidInputError(
            f"coefficient panel {D.shape} and weights {y.shape} disagree on N"
        )
    gram = y @ y.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedWeightsError(float(cond), cond_limit)
    factor = scipy.linalg.cho_factor(gram, lower=True)
    # Theta' = (y y')^{-1} y D'
    return scipy.linalg.cho_solve(factor, y @ D.T).T


def reconstruct_components(theta_hat, plan: TransformPlan) -> np.ndarray:
    """Map estimated component coefficients (M, L) back to curves."""
    theta = np.asarray(theta_hat, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != plan.M:
        raise InvalidInputError(
            f"expected an ({plan.M}, L) coefficient matrix, got shape {theta.shape}"
        )
    return idwt(theta, plan)
