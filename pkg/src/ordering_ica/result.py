"""Separation results and the seeded random streams both algorithms share."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = ["ComponentDiagnostics", "SeparationResult", "candidate_rng"]


def candidate_rng(seed: int, index: int, candidate: int) -> np.random.Generator:
    """Random stream for candidate ``candidate`` (0-based) at component ``index`` (1-based).

    Streams come from ``SeedSequence(seed)``: component ``index`` owns the child
    with spawn key ``(index - 1,)`` and each candidate the grandchild
    ``(index - 1, candidate)``. This is exactly what
    ``SeedSequence(seed).spawn(...)[index - 1].spawn(...)[candidate]`` yields,
    so any candidate's draw can be reproduced without drawing the others.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(index - 1, candidate))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ComponentDiagnostics:
    """What happened while searching for one component.

    ``iterations`` is the number of Newton steps taken by the longest-running
    candidate; ``winner_iterations`` those of the selected one.
    """

    index: int
    iterations: int
    winner: int
    winner_iterations: int
    n_converged: int
    n_unconverged: int
    n_degenerate: int
    alpha: float
    upsilon: float
    threshold: float
    accepted: bool
    seconds: float = 0.0


@dataclass
class SeparationResult:
    """Output of an ordering ICA run.

    Attributes
    ----------
    W : ndarray, shape (k, N)
        Separating rows in whitened coordinates, in extraction order.
    alpha, upsilon : ndarray, shape (k,)
        Kurtosis estimate and contrast of each extracted component.
    stop_index : int or None
        1-based component index at which the Gaussianity test fired, or
        ``None`` if every component was extracted.
    components : list of ComponentDiagnostics
        One entry per examined index, including the rejected one.
    """

    algorithm: str
    W: np.ndarray
    alpha: np.ndarray
    upsilon: np.ndarray
    stop_index: Optional[int]
    components: List[ComponentDiagnostics] = field(default_factory=list)
    total_seconds: float = 0.0

    @property
    def n_extracted(self) -> int:
        return self.W.shape[0]

    @property
    def component_seconds(self) -> np.ndarray:
        return np.array([c.seconds for c in self.components])

    @property
    def iterations(self) -> np.ndarray:
        return np.array([c.iterations for c in self.components], dtype=int)
