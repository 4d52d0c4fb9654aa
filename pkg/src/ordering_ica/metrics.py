"""Ordering error and run-to-run fluctuation."""

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from .errors import DimensionMismatch, ZeroVector

__all__ = [
    "FluctuationReport",
    "ordering_error",
    "cosine_divergence",
    "fluctuation",
    "DEFAULT_GROUPS",
]

DEFAULT_GROUPS = (20, 20)


def ordering_error(W, A, tau: float = 0.1) -> float:
    """Fraction of entries of ``W @ A`` off the identity pattern.

    ``A``'s columns must already be sorted by true non-Gaussianity rank.
    Each row of ``P = W @ A`` is first sign-flipped so that its largest
    magnitude entry is positive; then entries with ``|P - I| > tau`` are
    counted and divided by ``N**2``. Zero only for a separation in the
    correct order, up to row signs.
    """
    W = np.asarray(W, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if W.ndim != 2 or A.ndim != 2 or A.shape[0] != A.shape[1] or W.shape != A.shape:
        raise DimensionMismatch(f"W {W.shape} and A {A.shape} must be equal squares")
    if not tau > 0:
        raise ValueError("tau must be positive")
    P = W @ A
    peak = P[np.arange(P.shape[0]), np.argmax(np.abs(P), axis=1)]
    P = P * np.where(peak < 0, -1.0, 1.0)[:, None]
    n = P.shape[0]
    return float(np.count_nonzero(np.abs(P - np.eye(n)) > tau)) / n**2


def cosine_divergence(u, v) -> float:
    """``1 - |cos(u, v)|``: 0 for parallel or antiparallel, 1 for orthogonal."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine undefined for a zero vector")
    u, v = u / nu, v / nv
    # 1 - |cos| written as a squared distance: exact for identical vectors and
    # free of cancellation when the vectors are nearly parallel.
    gap = min(np.sum((u - v) ** 2), np.sum((u + v) ** 2)) / 2.0
    return float(np.clip(gap, 0.0, 1.0))


@dataclass
class FluctuationReport:
    per_component: np.ndarray
    group_averages: Dict[str, float] = field(default_factory=dict)


def _groups(n, sizes):
    out, start = {"all": (0, n)}, 0
    names = ["top", "mid"]
    for name, size in zip(names, sizes):
        stop = min(start + size, n)
        if stop > start:
            out[name] = (start, stop)
        start = stop
    if start < n:
        out["rest"] = (start, n)
    return out


def fluctuation(runs: Sequence, groups=DEFAULT_GROUPS) -> FluctuationReport:
    """Mean pairwise cosine divergence of corresponding rows across runs.

    Parameters
    ----------
    runs : sequence of ndarray, each (k, N)
        Separating matrices from ``T >= 2`` runs, rows in rank order.
    groups : tuple of int
        Sizes of the leading rank bands, reported as ``top`` and ``mid``;
        remaining rows form ``rest``.
    """
    mats = [np.asarray(r, dtype=np.float64) for r in runs]
    if len(mats) < 2:
        raise ValueError("need at least two runs")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats) or len(shape) != 2:
        raise DimensionMismatch("all runs must share one 2-D shape")
    stack = np.stack(mats)
    norms = np.linalg.norm(stack, axis=2)
    if np.any(norms == 0):
        raise ZeroVector("a run contains a zero row")
    unit = stack / norms[..., None]
    # gap[t, u, i] = 1 - |<w_i^t, w_i^u>| via the squared-distance form
    minus = np.sum((unit[:, None] - unit[None, :]) ** 2, axis=3)
    plus = np.sum((unit[:, None] + unit[None, :]) ** 2, axis=3)
    T = len(mats)
    off = ~np.eye(T, dtype=bool)
    div = np.clip(np.minimum(minus, plus)[off] / 2.0, 0.0, 1.0)
    per_component = div.mean(axis=0)
    averages = {
        name: float(per_component[a:b].mean())
        for name, (a, b) in _groups(shape[0], groups).items()
    }
    return FluctuationReport(per_component=per_component, group_averages=averages)
