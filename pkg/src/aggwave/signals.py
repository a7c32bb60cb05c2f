"""Standard wavelet-denoising test signals: Bumps, Blocks, Doppler, Heavisine.

Closed forms with the usual knot, height and width tables.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .models import grid

__all__ = ["SIGNALS", "DEFAULT_SD", "dj_function", "rescale_to_sd"]

DEFAULT_SD = 7.0

_KNOTS = np.array([0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
_BUMP_HEIGHTS = np.array([4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
_BUMP_WIDTHS = np.array([0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005])
_BLOCK_HEIGHTS = np.array([4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2])


def _bumps(t):
    u = np.abs((t[:, None] - _KNOTS) / _BUMP_WIDTHS)
    return (_BUMP_HEIGHTS / (1.0 + u**4)).sum(axis=1)


def _blocks(t):
    # right-continuous unit step so every knot is a single jump on the grid
    step = (t[:, None] >= _KNOTS).astype(float)
    return (_BLOCK_HEIGHTS * step).sum(axis=1)


def _doppler(t, eps=0.05):
    return np.sqrt(t * (1.0 - t)) * np.sin(2.0 * np.pi * (1.0 + eps) / (t + eps))


def _heavisine(t):
    return 4.0 * np.sin(4.0 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t)


SIGNALS = {
    "bumps": _bumps,
    "blocks": _blocks,
    "doppler": _doppler,
    "heavisine": _heavisine,
}


def rescale_to_sd(signal, target_sd: float) -> np.ndarray:
    """Multiply ``signal`` so its empirical (population) sd equals ``target_sd``."""
    x = np.asarray(signal, dtype=float)
    if not target_sd > 0:
        raise InvalidInputError(f"target sd must be positive, got {target_sd}")
    s = np.std(x)
    if not s > 0:
        raise InvalidInputError("cannot rescale a constant signal")
    return x * (target_sd / s)


def dj_function(name: str, M: int, target_sd: float | None = None) -> np.ndarray:
    """Sample a test signal on ``t_m = m/M``; optionally rescale to ``target_sd``."""
    key = name.lower()
    if key not in SIGNALS:
        raise InvalidInputError(
            f"unknown test signal {name!r}; valid names: {', '.join(sorted(SIGNALS))}"
        )
    if M < 1 or M & (M - 1):
        raise InvalidInputError(f"signal length must be a power of two, got {M}")
    x = SIGNALS[key](grid(M))
    return x if target_sd is None else rescale_to_sd(x, target_sd)
