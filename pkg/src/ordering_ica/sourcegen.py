"""Generalized-Gaussian sources and random mixtures for benchmark datasets."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import gammaln

from .errors import MixingGenerationFailed
from .signal import Dataset

__all__ = [
    "SourceSpec",
    "gg_beta",
    "gg_kurtosis",
    "gg_sample",
    "paper_rho_grid",
    "random_mixing",
    "gen_dataset",
]

MAX_CONDITION = 1e6
MAX_MIXING_ATTEMPTS = 100


def _check_rho(rho):
    if not rho > 0:
        raise ValueError(f"shape parameter must be positive, got {rho!r}")


def gg_beta(rho: float) -> float:
    """Scale giving unit variance: ``sqrt(Gamma(1/rho) / Gamma(3/rho))``."""
    _check_rho(rho)
    return float(np.exp(0.5 * (gammaln(1.0 / rho) - gammaln(3.0 / rho))))


def gg_kurtosis(rho: float) -> float:
    """Excess kurtosis ``Gamma(5/rho) Gamma(1/rho) / Gamma(3/rho)**2 - 3``."""
    _check_rho(rho)
    log_ratio = gammaln(5.0 / rho) + gammaln(1.0 / rho) - 2.0 * gammaln(3.0 / rho)
    return float(np.exp(log_ratio) - 3.0)


def gg_sample(rho: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from the unit-variance generalized Gaussian ``exp(-(|u|/beta)**rho)``.

    Uses ``u = s * beta * g**(1/rho)`` with a random sign ``s`` and
    ``g ~ Gamma(1/rho, 1)``.
    """
    _check_rho(rho)
    g = rng.gamma(1.0 / rho, 1.0, size=size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * gg_beta(rho) * g ** (1.0 / rho)


def paper_rho_grid() -> List[float]:
    """The 20 shapes ``2 * 2**(i/4)`` for ``i = -10..-1, 1..10``, ascending.

    The first ten are super-Gaussian (positive kurtosis), the last ten
    sub-Gaussian.
    """
    return [2.0 * 2.0 ** (i / 4.0) for i in range(-10, 11) if i != 0]


@dataclass
class SourceSpec:
    """Recipe for a synthetic dataset.

    One generalized-Gaussian row per entry of ``rhos``, followed by
    ``gaussian_count`` standard-normal rows.
    """

    rhos: List[float] = field(default_factory=list)
    gaussian_count: int = 0
    samples: int = 10000
    seed: int = 0

    def __post_init__(self):
        self.rhos = [float(r) for r in self.rhos]
        for r in self.rhos:
            _check_rho(r)
        if self.gaussian_count < 0:
            raise ValueError("gaussian_count must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    @property
    def n_sources(self) -> int:
        return len(self.rhos) + self.gaussian_count


def random_mixing(n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal ``n x n`` matrix with condition number below 1e6."""
    for _ in range(MAX_MIXING_ATTEMPTS):
        A = rng.standard_normal((n, n))
        if np.linalg.cond(A) < MAX_CONDITION:
            return A
    raise MixingGenerationFailed(
        f"no well-conditioned {n}x{n} mixing in {MAX_MIXING_ATTEMPTS} attempts"
    )


def gen_dataset(spec: SourceSpec, mixing: Optional[np.ndarray] = None) -> Dataset:
    """Generate sources, a random mixing matrix and the observed mixture.

    Sources are drawn from one seeded generator in row order, then the
    mixing matrix. Passing ``mixing`` bypasses the random draw (the
    sources are unchanged).
    """
    n = spec.n_sources
    if n < 1:
        raise ValueError("spec describes no sources")
    rng = np.random.default_rng(spec.seed)
    rows = [gg_sample(r, spec.samples, rng) for r in spec.rhos]
    rows += [rng.standard_normal(spec.samples) for _ in range(spec.gaussian_count)]
    S = np.vstack(rows)
    if mixing is None:
        A = random_mixing(n, rng)
    else:
        A = np.asarray(mixing, dtype=np.float64)
        if A.shape != (n, n):
            raise ValueError(f"mixing must be {n}x{n}, got {A.shape}")
    kurt = np.array([gg_kurtosis(r) for r in spec.rhos] + [0.0] * spec.gaussian_count)
    return Dataset(observed=A @ S, mixing=A, sources=S, true_kurtoses=kurt)
