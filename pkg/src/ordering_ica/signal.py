"""Dense signal matrices, centering and whitening.

Signals are ``(n_channels, n_samples)`` float64 arrays: rows are channels
or components, columns are samples.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionMismatch, RankDeficient

__all__ = [
    "WhiteningModel",
    "Dataset",
    "as_matrix",
    "center",
    "whiten",
    "compose_unmixing",
    "preprocess",
]


def as_matrix(X, name="X", allow_empty_rows=False) -> np.ndarray:
    """Validate and convert ``X`` to a finite 2-D float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[1] < 1 or (X.shape[0] < 1 and not allow_empty_rows):
        raise DimensionMismatch(f"{name} has an empty dimension: {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf")
    return X


@dataclass(frozen=True)
class WhiteningModel:
    """Affine map from raw signals to zero-mean, identity-covariance signals.

    Attributes
    ----------
    mean : ndarray, shape (N,)
        Per-channel mean removed before whitening.
    whiten : ndarray, shape (N, N)
        Whitening matrix ``V = D^{-1/2} E^T``.
    dewhiten : ndarray, shape (N, N)
        Its inverse ``E D^{1/2}``.
    eigenvalues : ndarray, shape (N,)
        Eigenvalues of the sample covariance, ascending.
    """

    mean: np.ndarray
    whiten: np.ndarray
    dewhiten: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_channels(self) -> int:
        return self.whiten.shape[0]

    def transform(self, X):
        X = as_matrix(X)
        if X.shape[0] != self.n_channels:
            raise DimensionMismatch(
                f"expected {self.n_channels} channels, got {X.shape[0]}"
            )
        return self.whiten @ (X - self.mean[:, None])


@dataclass
class Dataset:
    """Observed signals plus optional ground truth.

    ``observed == mixing @ sources`` when both are present.
    ``true_kurtoses`` holds one closed-form kurtosis per source row.
    """

    observed: np.ndarray
    mixing: Optional[np.ndarray] = None
    sources: Optional[np.ndarray] = None
    true_kurtoses: Optional[np.ndarray] = None

    @property
    def n_channels(self) -> int:
        return self.observed.shape[0]

    @property
    def n_samples(self) -> int:
        return self.observed.shape[1]

    def source_order(self) -> np.ndarray:
        """Source indices sorted by true non-Gaussianity, strongest first.

        Ties (e.g. several Gaussian rows) keep their original order.
        """
        if self.true_kurtoses is None:
            raise ValueError("dataset carries no ground-truth kurtoses")
        from .contrast import upsilon

        scores = np.array([upsilon(k) for k in self.true_kurtoses])
        return np.argsort(-scores, kind="stable")

    def sorted_mixing(self) -> np.ndarray:
        """Mixing matrix with columns permuted into ground-truth rank order."""
        if self.mixing is None:
            raise ValueError("dataset carries no mixing matrix")
        return self.mixing[:, self.source_order()]


def center(X) -> Tuple[np.ndarray, np.ndarray]:
    """Remove the mean of every row.

    Returns
    -------
    Xc : ndarray
        Row-centered copy of ``X``.
    mean : ndarray, shape (N,)
        Removed row means.
    """
    X = as_matrix(X)
    mean = X.mean(axis=1)
    return X - mean[:, None], mean


def whiten(Xc, eig_floor=1e-12) -> Tuple[np.ndarray, WhiteningModel]:
    """Whiten centered signals by symmetric eigendecomposition.

    The sample covariance uses divisor ``M``. Each eigenvector's sign is
    fixed so that its largest-magnitude entry is positive.

    Parameters
    ----------
    Xc : array_like, shape (N, M)
        Row-centered signals, ``M > N``.
    eig_floor : float
        Relative eigenvalue floor; eigenvalues below
        ``eig_floor * max_eigenvalue`` raise :class:`RankDeficient`.

    Returns
    -------
    Xw : ndarray, shape (N, M)
        ``V @ Xc`` with ``Xw @ Xw.T / M == I``.
    model : WhiteningModel
        The mean stored in ``model`` is zero; see :func:`preprocess` for the
        full raw-to-white pipeline.
    """
    Xc = as_matrix(Xc, "Xc")
    n, m = Xc.shape
    if m <= n:
        raise DimensionMismatch(f"need more samples than channels, got {Xc.shape}")
    cov = Xc @ Xc.T / m
    cov = (cov + cov.T) / 2
    eigval, eigvec = np.linalg.eigh(cov)
    top = eigval[-1]
    if top <= 0 or eigval[0] < eig_floor * top:
        raise RankDeficient(
            f"covariance eigenvalue {eigval[0]:.3e} below floor "
            f"{eig_floor:.1e} x {top:.3e}"
        )
    pivot = np.argmax(np.abs(eigvec), axis=0)
    signs = np.sign(eigvec[pivot, np.arange(n)])
    eigvec = eigvec * signs
    root = np.sqrt(eigval)
    V = eigvec.T / root[:, None]
    V_inv = eigvec * root
    model = WhiteningModel(
        mean=np.zeros(n), whiten=V, dewhiten=V_inv, eigenvalues=eigval
    )
    return V @ Xc, model


def preprocess(X, eig_floor=1e-12) -> Tuple[np.ndarray, WhiteningModel]:
    """Center then whiten raw signals; the returned model keeps the mean."""
    Xc, mean = center(X)
    Xw, model = whiten(Xc, eig_floor=eig_floor)
    return Xw, WhiteningModel(
        mean=mean,
        whiten=model.whiten,
        dewhiten=model.dewhiten,
        eigenvalues=model.eigenvalues,
    )


def compose_unmixing(W_white, model: WhiteningModel) -> np.ndarray:
    """Map a whitened-space separating matrix back to raw-signal space."""
    W_white = np.asarray(W_white, dtype=np.float64)
    if W_white.ndim != 2 or W_white.shape[1] != model.n_channels:
        raise DimensionMismatch(
            f"W has shape {W_white.shape}, whitening is {model.n_channels}-dim"
        )
    return W_white @ model.whiten
