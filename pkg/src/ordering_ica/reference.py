"""Per-candidate deflation ordering ICA.

Each of the ``L`` candidates is a separate one-unit FastICA run in the full
``N``-dimensional whitened space, kept orthogonal to the already extracted
rows by explicit projection. Slow but simple; it serves as the oracle for
:mod:`ordering_ica.fast`.
"""

import time
from dataclasses import dataclass

import numpy as np

from .contrast import gaussianity_threshold, kurtosis_alpha, upsilon
from .errors import AllCandidatesDegenerate, DegenerateCandidate, DimensionMismatch
from .fast import complement_basis
from .result import ComponentDiagnostics, SeparationResult, candidate_rng
from .signal import as_matrix

__all__ = ["OneUnitResult", "fastica_one_unit", "initial_vector", "ordering_ica_reference"]

DEGENERATE_NORM = 1e-12


@dataclass
class OneUnitResult:
    w: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool


def _project_normalize(w, E):
    if E is not None:
        w = w - E @ w
    norm = np.sqrt(w @ w)
    if norm < DEGENERATE_NORM:
        raise DegenerateCandidate("candidate lies in the span of extracted rows")
    return w / norm


def fastica_one_unit(w0, Xw, E=None, K=30, eps=1e-6) -> OneUnitResult:
    """One-unit kurtosis FastICA under deflation constraints.

    Iterates ``w <- X (y*y*y)^T / M - 3w`` followed by projection with
    ``I - E`` and renormalization, until ``w`` stops moving up to sign
    (``min(|w - w_prev|, |w + w_prev|) <= eps``) or ``K`` steps have run.

    Parameters
    ----------
    w0 : array_like, shape (N,)
        Starting vector; need not be normalized.
    Xw : ndarray, shape (N, M)
        Whitened signals.
    E : ndarray, shape (N, N), optional
        Projector ``W^T W`` onto the extracted rows; ``None`` for the first
        component.
    """
    Xw = np.asarray(Xw, dtype=np.float64)
    w = np.asarray(w0, dtype=np.float64)
    if w.shape != (Xw.shape[0],):
        raise DimensionMismatch(f"w0 has shape {w.shape}, X has {Xw.shape[0]} rows")
    if E is not None and not np.any(E):
        E = None
    M = Xw.shape[1]
    w = _project_normalize(w, E)
    t = 0
    converged = False
    while True:
        w_prev = w
        y = w @ Xw
        w = Xw @ (y * y * y) / M - 3.0 * w
        w = _project_normalize(w, E)
        t += 1
        dist = min(np.linalg.norm(w - w_prev), np.linalg.norm(w + w_prev))
        if dist <= eps:
            converged = True
            break
        if t >= K:
            break
    return OneUnitResult(w=w, y=w @ Xw, iterations=t, converged=converged)


def initial_vector(seed, index, candidate, n_channels, basis=None):
    """Starting vector for one candidate.

    With a complement ``basis`` (rows ``G``), draws ``N - i + 1`` normals from
    the candidate's stream and lifts them, ``w0 = G^T b0``, consuming exactly
    what :func:`ordering_ica_fast` consumes. Without one, draws ``N`` normals.
    Both are uniform on the complement sphere after projection.
    """
    rng = candidate_rng(seed, index, candidate)
    if basis is None:
        return rng.standard_normal(n_channels)
    return basis.T @ rng.standard_normal(basis.shape[0])


def ordering_ica_reference(
    Xw,
    L: int,
    K: int = 30,
    eps: float = 1e-6,
    seed: int = 0,
    *,
    gaussianity_test: bool = True,
    init: str = "matched",
) -> SeparationResult:
    """Ordering ICA by ``L`` independent deflation runs per component.

    For each component the candidate with the largest contrast wins; the
    search stops when that contrast falls below the Gaussianity threshold.
    Candidates that vanish under projection are skipped.

    ``init="matched"`` (default) starts candidate ``l`` of component ``i``
    from the same draw the batched algorithm uses, lifted to the full space;
    ``init="full"`` draws directly in ``N`` dimensions.
    """
    Xw = as_matrix(Xw, "Xw")
    if L < 1:
        raise ValueError("L must be at least 1")
    if init not in ("matched", "full"):
        raise ValueError(f"unknown init {init!r}")
    N, M = Xw.shape
    start = time.perf_counter()
    W = np.zeros((0, N))
    alphas, upsilons, comps = [], [], []
    stop_index = None
    for i in range(1, N + 1):
        t0 = time.perf_counter()
        E = W.T @ W if i > 1 else None
        basis = complement_basis(W, N).G if init == "matched" else None
        runs, ids, n_degenerate = [], [], 0
        for l in range(L):
            w0 = initial_vector(seed, i, l, N, basis)
            try:
                runs.append(fastica_one_unit(w0, Xw, E, K, eps))
                ids.append(l)
            except DegenerateCandidate:
                n_degenerate += 1
        if not runs:
            raise AllCandidatesDegenerate(f"all {L} candidates degenerate at component {i}")
        cand_alpha = [kurtosis_alpha(r.y) for r in runs]
        cand_ups = [upsilon(a) for a in cand_alpha]
        p = int(np.argmax(cand_ups))
        threshold = gaussianity_threshold(N, i, M)
        accepted = not (gaussianity_test and cand_ups[p] < threshold)
        n_conv = sum(r.converged for r in runs)
        comps.append(
            ComponentDiagnostics(
                index=i,
                iterations=max(r.iterations for r in runs),
                winner=ids[p],
                winner_iterations=runs[p].iterations,
                n_converged=n_conv,
                n_unconverged=len(runs) - n_conv,
                n_degenerate=n_degenerate,
                alpha=cand_alpha[p],
                upsilon=cand_ups[p],
                threshold=threshold,
                accepted=accepted,
            )
        )
        if not accepted:
            comps[-1].seconds = time.perf_counter() - t0
            stop_index = i
            break
        W = np.vstack([W, runs[p].w])
        alphas.append(cand_alpha[p])
        upsilons.append(cand_ups[p])
        comps[-1].seconds = time.perf_counter() - t0
    return SeparationResult(
        algorithm="reference",
        W=W,
        alpha=np.array(alphas),
        upsilon=np.array(upsilons),
        stop_index=stop_index,
        components=comps,
        total_seconds=time.perf_counter() - start,
    )
