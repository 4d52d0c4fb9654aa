"""Batched ordering ICA.

All ``L`` candidate runs for a component are advanced together as the rows
of one matrix ``B``. Rows that converge leave the batch, and the signal is
projected onto an orthonormal basis ``G`` of the complement of the rows
already extracted, so step ``i`` works in ``N - i + 1`` dimensions and needs
no per-iteration orthogonalization.
"""

import time
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg

from .contrast import gaussianity_threshold, upsilon_batch
from .errors import (
    AllCandidatesDegenerate,
    DegenerateRow,
    DimensionMismatch,
    IllConditionedComplement,
)
from .result import ComponentDiagnostics, SeparationResult, candidate_rng
from .signal import as_matrix

__all__ = [
    "ComplementBasis",
    "CandidateBatch",
    "sym_inv_sqrt",
    "complement_basis",
    "batch_newton_step",
    "partition_converged",
    "initial_batch",
    "ordering_ica_fast",
]

DEGENERATE_NORM = 1e-12
COMPLEMENT_FLOOR = 1e-10
ORTHONORMAL_TOL = 1e-9


def sym_inv_sqrt(S, floor=COMPLEMENT_FLOOR) -> np.ndarray:
    """Inverse square root ``R`` of a symmetric positive definite matrix.

    ``R`` is symmetric and ``R @ S @ R == I``.

    Raises
    ------
    IllConditionedComplement
        If the smallest eigenvalue of ``S`` is below ``floor``.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {S.shape}")
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-10):
        raise ValueError("matrix is not symmetric")
    eigval, eigvec = np.linalg.eigh((S + S.T) / 2)
    if eigval[0] < floor:
        raise IllConditionedComplement(
            f"smallest eigenvalue {eigval[0]:.3e} below floor {floor:.1e}"
        )
    R = (eigvec / np.sqrt(eigval)) @ eigvec.T
    return (R + R.T) / 2


@dataclass(frozen=True)
class ComplementBasis:
    """Orthonormal rows ``G`` spanning the complement of the extracted rows."""

    G: np.ndarray
    used_fallback: bool = False

    @property
    def reduced_dim(self) -> int:
        return self.G.shape[0]


def _orthonormalize_rows(F_sub, floor):
    G = sym_inv_sqrt(F_sub @ F_sub.T, floor=floor) @ F_sub
    err = np.max(np.abs(G @ G.T - np.eye(G.shape[0])))
    if err > ORTHONORMAL_TOL:
        raise IllConditionedComplement(f"basis orthonormality error {err:.2e}")
    return G


def complement_basis(W, n_channels: int, floor=COMPLEMENT_FLOOR) -> ComplementBasis:
    """Orthonormal basis of the orthogonal complement of the rows of ``W``.

    The projector ``F = I - W^T W`` is computed, its top ``N - k`` rows are
    kept and symmetrically orthonormalized: ``G = (F~ F~^T)^{-1/2} F~``.
    When those rows do not span the complement (or orthonormalize poorly),
    rows of ``F`` are instead picked greedily by residual diagonal magnitude
    (pivoted QR of the symmetric ``F``) and orthonormalized the same way.
    """
    W = np.asarray(W, dtype=np.float64).reshape(-1, n_channels)
    k = W.shape[0]
    if k == 0:
        return ComplementBasis(np.eye(n_channels))
    if k >= n_channels:
        raise DimensionMismatch(f"{k} rows leave no complement in {n_channels} dims")
    d = n_channels - k
    F = np.eye(n_channels) - W.T @ W
    try:
        return ComplementBasis(_orthonormalize_rows(F[:d], floor))
    except IllConditionedComplement:
        pass
    _, _, piv = scipy.linalg.qr(F, mode="economic", pivoting=True)
    rows = np.sort(piv[:d])
    return ComplementBasis(_orthonormalize_rows(F[rows], floor), used_fallback=True)


@dataclass
class CandidateBatch:
    """Working state of the batched iteration for one component.

    ``active`` holds rows still being updated and ``active_ids`` their
    original candidate numbers; converged rows are stored in ``conv_rows``
    with their candidate number and iteration count.
    """

    active: np.ndarray
    active_ids: np.ndarray
    conv_rows: List[np.ndarray] = field(default_factory=list)
    conv_ids: List[int] = field(default_factory=list)
    conv_iterations: List[int] = field(default_factory=list)
    conv_flags: List[bool] = field(default_factory=list)
    n_degenerate: int = 0
    t: int = 0

    @property
    def n_active(self) -> int:
        return self.active.shape[0]

    def retire(self, mask, converged: bool):
        for row, cid in zip(self.active[mask], self.active_ids[mask]):
            self.conv_rows.append(row)
            self.conv_ids.append(int(cid))
            self.conv_iterations.append(self.t)
            self.conv_flags.append(converged)
        keep = ~mask
        self.active = self.active[keep]
        self.active_ids = self.active_ids[keep]


BLOCK_SAMPLES = 256


def _newton_raw(B, X_red):
    M = X_red.shape[1]
    Z = B @ X_red
    return (Z * Z * Z) @ X_red.T / M - 3.0 * B


class _NewtonWorkspace:
    """Cache-friendly evaluation of the batch update.

    The samples are stored sample-major and processed in blocks of
    ``BLOCK_SAMPLES`` so the cubed projections of a block stay in cache
    instead of materializing an ``L x M`` temporary. Only the summation order
    over samples differs from :func:`_newton_raw`.
    """

    def __init__(self, X_red, n_rows, block=BLOCK_SAMPLES):
        self.XT = np.ascontiguousarray(X_red.T)
        self.M = self.XT.shape[0]
        self.block = min(block, self.M)
        self.Z = np.empty((self.block, n_rows))
        self.C = np.empty_like(self.Z)

    def step(self, B):
        n = B.shape[0]
        Bt = np.ascontiguousarray(B.T)
        acc = np.zeros((self.XT.shape[1], n))
        for start in range(0, self.M, self.block):
            Xb = self.XT[start : start + self.block]
            z, c = self.Z[: len(Xb), :n], self.C[: len(Xb), :n]
            np.matmul(Xb, Bt, out=z)
            np.multiply(z, z, out=c)
            c *= z
            acc += Xb.T @ c
        out = acc.T / self.M
        out -= 3.0 * B
        return out

    def kurtosis(self, B):
        """Row-wise kurtosis estimate of ``B @ X_red``, same blocking."""
        n = B.shape[0]
        Bt = np.ascontiguousarray(B.T)
        acc = np.zeros(n)
        for start in range(0, self.M, self.block):
            Xb = self.XT[start : start + self.block]
            z, c = self.Z[: len(Xb), :n], self.C[: len(Xb), :n]
            np.matmul(Xb, Bt, out=z)
            np.multiply(z, z, out=c)
            c *= c
            acc += c.sum(axis=0)
        return acc / self.M - 3.0


def batch_newton_step(B, X_red) -> np.ndarray:
    """One kurtosis fixed-point step for every row of ``B``, rows renormalized.

    Computes ``(Z*Z*Z) X_red^T / M - 3B`` with ``Z = B X_red``.

    Raises
    ------
    DegenerateRow
        If a row's norm before renormalization is below 1e-12.
    """
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    X_red = np.asarray(X_red, dtype=np.float64)
    if B.shape[1] != X_red.shape[0]:
        raise DimensionMismatch(f"B {B.shape} incompatible with X {X_red.shape}")
    B_new = _newton_raw(B, X_red)
    norms = np.linalg.norm(B_new, axis=1)
    if np.any(norms < DEGENERATE_NORM):
        raise DegenerateRow(f"row {int(np.argmin(norms))} vanished in the update")
    return B_new / norms[:, None]


def partition_converged(B_new, B_prev, eps) -> Tuple[np.ndarray, np.ndarray]:
    """Split row indices into still-active and newly converged.

    Row ``l`` has converged when ``min(|b_l - b_prev|, |b_l + b_prev|) <= eps``,
    i.e. it stopped moving up to a sign flip.
    """
    B_new = np.atleast_2d(np.asarray(B_new, dtype=np.float64))
    B_prev = np.atleast_2d(np.asarray(B_prev, dtype=np.float64))
    if B_new.shape != B_prev.shape:
        raise DimensionMismatch(f"{B_new.shape} vs {B_prev.shape}")
    done = _converged_mask(B_new, B_prev, eps)
    return np.flatnonzero(~done), np.flatnonzero(done)


def _converged_mask(B_new, B_prev, eps):
    dist_minus = np.linalg.norm(B_new - B_prev, axis=1)
    dist_plus = np.linalg.norm(B_new + B_prev, axis=1)
    return np.minimum(dist_minus, dist_plus) <= eps


def initial_batch(seed: int, index: int, n_candidates: int, dim: int) -> np.ndarray:
    """Unnormalized standard-normal starting rows, one seeded stream per candidate."""
    return np.stack(
        [candidate_rng(seed, index, l).standard_normal(dim) for l in range(n_candidates)]
    )


def _run_batch(B0, X_red, K, eps, strict, on_step=None, work=None):
    norms = np.linalg.norm(B0, axis=1)
    ok = norms >= DEGENERATE_NORM
    batch = CandidateBatch(
        active=B0[ok] / norms[ok, None], active_ids=np.flatnonzero(ok)
    )
    batch.n_degenerate = int(np.count_nonzero(~ok))
    if work is None:
        work = _NewtonWorkspace(X_red, batch.n_active)
    while batch.n_active and batch.t < K:
        B_prev = batch.active
        B_new = work.step(B_prev)
        norms = np.linalg.norm(B_new, axis=1)
        bad = norms < DEGENERATE_NORM
        if np.any(bad):
            batch.n_degenerate += int(np.count_nonzero(bad))
            keep = ~bad
            B_new, B_prev, norms = B_new[keep], B_prev[keep], norms[keep]
            batch.active_ids = batch.active_ids[keep]
        batch.active = B_new / norms[:, None]
        batch.t += 1
        batch.retire(_converged_mask(batch.active, B_prev, eps), converged=True)
        if on_step is not None:
            on_step(batch)
    if batch.n_active:
        if strict:
            batch.active = batch.active[:0]
            batch.active_ids = batch.active_ids[:0]
        else:
            batch.retire(np.ones(batch.n_active, dtype=bool), converged=False)
    return batch


def ordering_ica_fast(
    Xw,
    L: int,
    K: int = 30,
    eps: float = 1e-6,
    seed: int = 0,
    *,
    gaussianity_test: bool = True,
    strict: bool = False,
) -> SeparationResult:
    """Ordering ICA with batched candidate updates.

    Parameters
    ----------
    Xw : array_like, shape (N, M)
        Centered, whitened signals.
    L : int
        Number of random initializations per component.
    K : int
        Maximum fixed-point iterations.
    eps : float
        Sign-invariant convergence threshold.
    seed : int
        Seed of the candidate streams (see :func:`candidate_rng`).
    gaussianity_test : bool
        Stop once the best contrast falls below the Gaussianity threshold.
        When False all ``N`` components are extracted.
    strict : bool
        Drop rows still active after ``K`` iterations instead of letting them
        compete in the argmax.

    Returns
    -------
    SeparationResult
        ``W`` in whitened coordinates.
    """
    Xw = as_matrix(Xw, "Xw")
    if L < 1:
        raise ValueError("L must be at least 1")
    N, M = Xw.shape
    start = time.perf_counter()
    rows, alphas, upsilons, comps = [], [], [], []
    stop_index = None
    for i in range(1, N + 1):
        t0 = time.perf_counter()
        d = N - i + 1
        if i == 1:
            G = np.eye(N)
            X_red = Xw
        else:
            G = complement_basis(np.array(rows), N).G
            X_red = G @ Xw
        work = _NewtonWorkspace(X_red, L)
        batch = _run_batch(initial_batch(seed, i, L, d), X_red, K, eps, strict, work=work)
        if not batch.conv_rows:
            raise AllCandidatesDegenerate(f"no usable candidate at component {i}")
        order = np.argsort(batch.conv_ids, kind="stable")
        B_conv = np.array(batch.conv_rows)[order]
        alpha = work.kurtosis(B_conv)
        ups = upsilon_batch(alpha)
        p = int(np.argmax(ups))
        threshold = gaussianity_threshold(N, i, M)
        accepted = not (gaussianity_test and ups[p] < threshold)
        flags = np.array(batch.conv_flags)
        comps.append(
            ComponentDiagnostics(
                index=i,
                iterations=batch.t,
                winner=int(np.array(batch.conv_ids)[order][p]),
                winner_iterations=int(np.array(batch.conv_iterations)[order][p]),
                n_converged=int(np.count_nonzero(flags)),
                n_unconverged=int(np.count_nonzero(~flags)),
                n_degenerate=batch.n_degenerate,
                alpha=float(alpha[p]),
                upsilon=float(ups[p]),
                threshold=threshold,
                accepted=accepted,
            )
        )
        if not accepted:
            comps[-1].seconds = time.perf_counter() - t0
            stop_index = i
            break
        rows.append(B_conv[p] @ G)
        alphas.append(alpha[p])
        upsilons.append(ups[p])
        comps[-1].seconds = time.perf_counter() - t0
    return SeparationResult(
        algorithm="fast",
        W=np.array(rows).reshape(-1, N),
        alpha=np.array(alphas),
        upsilon=np.array(upsilons),
        stop_index=stop_index,
        components=comps,
        total_seconds=time.perf_counter() - start,
    )
