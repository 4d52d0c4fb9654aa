"""Kurtosis-based non-Gaussianity contrast and the Gaussianity stopping test."""

import math

import numpy as np

from .errors import DomainError

__all__ = ["kurtosis_alpha", "upsilon", "upsilon_batch", "gaussianity_threshold"]

# Distance from the two-point limit alpha = -2 below which the contrast is
# undefined for our purposes.
ALPHA_MARGIN = 1e-12


def kurtosis_alpha(y) -> float:
    """Fourth-moment kurtosis estimate ``sum(y**4)/M - 3``.

    ``y`` is assumed zero-mean and unit-variance; no normalization is done.
    """
    y = np.asarray(y, dtype=np.float64)
    y2 = y * y
    return float(np.mean(y2 * y2) - 3.0)


def kurtosis_alpha_rows(Z) -> np.ndarray:
    """Row-wise :func:`kurtosis_alpha` of a 2-D array."""
    Z = np.asarray(Z, dtype=np.float64)
    Z2 = Z * Z
    return np.mean(Z2 * Z2, axis=1) - 3.0


def upsilon(alpha) -> float:
    """Contrast ``alpha - 2*log(alpha/2 + 1)``; zero at alpha = 0, positive elsewhere.

    Raises
    ------
    DomainError
        If ``alpha <= -2 + 1e-12`` (two-point distributions and beyond).
    """
    alpha = float(alpha)
    if not alpha > -2.0 + ALPHA_MARGIN:
        raise DomainError(f"contrast undefined for alpha={alpha!r} <= -2")
    return alpha - 2.0 * math.log1p(alpha / 2.0)


def upsilon_batch(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(~(alpha > -2.0 + ALPHA_MARGIN)):
        bad = alpha[~(alpha > -2.0 + ALPHA_MARGIN)][0]
        raise DomainError(f"contrast undefined for alpha={bad!r} <= -2")
    return alpha - 2.0 * np.log1p(alpha / 2.0)


def gaussianity_threshold(n_components: int, index: int, n_samples: int) -> float:
    """Stopping threshold ``2(N-i+2)(N-i+1)/M`` for the 1-based component ``index``.

    Once the best candidate's contrast falls below this value the remaining
    components are declared Gaussian.
    """
    if not 1 <= index <= n_components:
        raise ValueError(f"index {index} outside 1..{n_components}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rest = n_components - index
    return 2.0 * (rest + 2) * (rest + 1) / n_samples
