"""PCA dimensionality reduction of context windows.

Classic mean-centred PCA via eigendecomposition of the sample covariance;
window dimensionality stays small (70 at the default configuration), so
the D x D eigensolve is cheaper and simpler than an SVD of the data
matrix. No whitening is applied.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientData
from .signal import ContextWindow

# eigenvalues below RANK_EPS * largest are treated as numerical zeros
RANK_EPS = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Retained eigenbasis of the training windows.

    basis rows are orthonormal eigenvectors sorted by descending
    eigenvalue; each row's largest-magnitude entry is made positive so
    serialization is deterministic.
    """

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    variance_fraction: float

    @property
    def n_components(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class FeatureVector:
    """Projection of one context window; ``center`` is the frame index."""

    center: int
    values: np.ndarray


def _as_matrix(windows) -> np.ndarray:
    if isinstance(windows, np.ndarray) and windows.ndim == 2:
        return np.asarray(windows, dtype=np.float64)
    rows = [np.asarray(w.values if isinstance(w, ContextWindow) else w, dtype=np.float64)
            for w in windows]
    dims = {r.shape for r in rows}
    if len(dims) > 1:
        raise DimensionError(f"windows have mixed dimensions: {sorted(dims)}")
    return np.vstack(rows)


def fit_pca(windows, variance_fraction: float = 0.95,
            n_components: int | None = None) -> PcaModel:
    """Fit the retained eigenspace of the mean-centred covariance.

    The component count is the smallest Q whose eigenvalues cover
    variance_fraction of the total; pass n_components to pin Q
    explicitly instead. Near-zero eigenvalues (rank deficiency) are
    never retained.
    """
    X = _as_matrix(windows)
    n, dim = X.shape
    if n < 2:
        raise InsufficientData(f"PCA needs at least 2 windows, got {n}")
    if not 0.0 < variance_fraction <= 1.0:
        raise DimensionError(
            f"variance_fraction must be in (0, 1], got {variance_fraction}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    nonzero = eigvals > RANK_EPS * (eigvals[0] if eigvals[0] > 0 else 1.0)
    rank = int(nonzero.sum())
    if n_components is not None:
        if not 1 <= n_components <= dim:
            raise DimensionError(f"n_components must be in [1, {dim}]")
        q = min(n_components, max(rank, 1))
    else:
        total = eigvals.sum()
        if total <= 0:
            raise InsufficientData("windows have zero variance")
        cum = np.cumsum(eigvals) / total
        q = int(np.searchsorted(cum, variance_fraction - 1e-15) + 1)
        q = min(q, max(rank, 1))

    basis = eigvecs[:, :q].T.copy()
    # deterministic sign: biggest-magnitude entry of each row positive
    for row in basis:
        k = np.argmax(np.abs(row))
        if row[k] < 0:
            row *= -1.0
    return PcaModel(mean=mean, basis=basis, eigenvalues=eigvals[:q].copy(),
                    variance_fraction=float(variance_fraction))


def project(model: PcaModel, window) -> FeatureVector:
    """Project one context window onto the retained basis."""
    center = window.center if isinstance(window, ContextWindow) else 0
    values = np.asarray(window.values if isinstance(window, ContextWindow) else window,
                        dtype=np.float64)
    if values.shape[-1] != model.dim:
        raise DimensionError(
            f"window dimension {values.shape[-1]} != model dimension {model.dim}")
    return FeatureVector(center=center, values=model.basis @ (values - model.mean))


def project_matrix(model: PcaModel, windows: np.ndarray) -> np.ndarray:
    """Project (N, D) windows to (N, Q) features in one shot."""
    X = np.asarray(windows, dtype=np.float64)
    if X.shape[-1] != model.dim:
        raise DimensionError(
            f"window dimension {X.shape[-1]} != model dimension {model.dim}")
    return (X - model.mean) @ model.basis.T


def reconstruct(model: PcaModel, features: np.ndarray) -> np.ndarray:
    """Map features back to window space (basis^T x + mean)."""
    return np.asarray(features) @ model.basis + model.mean
