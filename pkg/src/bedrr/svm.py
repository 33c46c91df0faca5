"""Soft-margin SVM with RBF kernel, trained by sequential minimal optimization.

The dual is solved two variables at a time using maximal-violating-pair
selection. Desk-scale problems (N <= 4096) precompute the full Gram matrix
and run the jit-compiled solver; larger problems fall back to an LRU row
cache so memory stays bounded. Fold-bagged ensembles sum member decision
scores before taking the sign.
"""

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateLabels, DimensionError, InsufficientData
from .features import FeatureVector, PcaModel

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000
FULL_GRAM_LIMIT = 4096


@dataclass(frozen=True)
class SvmModel:
    """Support vectors with signed coefficients alpha_m * y_m."""

    support_vectors: np.ndarray
    alphas_signed: np.ndarray
    bias: float
    gamma: float
    box: float

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


@dataclass
class SvmEnsemble:
    """Fold-bagged SVM models sharing one feature space."""

    members: list[SvmModel]
    pca: PcaModel | None = None
    radius: int = 3
    sigma: float = 10.0

    def __post_init__(self):
        if not self.members:
            raise InsufficientData("ensemble needs at least one member")
        dims = {m.support_vectors.shape[1] for m in self.members}
        if len(dims) > 1:
            raise DimensionError(f"members disagree on feature dimension: {dims}")


def rbf_kernel(a, b, gamma: float) -> float:
    """exp(-gamma * ||a-b||^2)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if gamma <= 0:
        raise DimensionError(f"gamma must be positive, got {gamma}")
    d = a - b
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_gram(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise kernel matrix exp(-gamma*||a_i-b_j||^2), shape (len A, len B)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-gamma * sq)


def _as_pm1(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    vals = set(np.unique(y).tolist())
    if vals <= {0.0, 1.0}:
        y = 2.0 * y - 1.0
        vals = set(np.unique(y).tolist())
    if not vals <= {-1.0, 1.0}:
        raise DimensionError(f"labels must be in {{0,1}} or {{-1,+1}}, got {sorted(vals)}")
    if len(vals) < 2:
        raise DegenerateLabels("training labels contain a single class")
    return y


class _RowCache:
    """LRU cache of Gram-matrix rows for training sets too big to hold."""

    def __init__(self, X: np.ndarray, gamma: float, capacity: int):
        self.X = X
        self.gamma = gamma
        self.capacity = capacity
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        cached = self._rows.get(i)
        if cached is not None:
            self._rows.move_to_end(i)
            return cached
        row = rbf_gram(self.X[i:i + 1], self.X, self.gamma)[0]
        self._rows[i] = row
        if len(self._rows) > self.capacity:
            self._rows.popitem(last=False)
        return row


def _smo_cached(X, y, gamma, C, tol, max_iter, cache_rows):
    """Row-cached variant of the SMO loop for large N (numpy path only)."""
    n = X.shape[0]
    cache = _RowCache(X, gamma=gamma, capacity=cache_rows)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    m = M = 0.0
    it = 0
    while it < max_iter:
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = int(np.where(up, score, -np.inf).argmax())
        j = int(np.where(low, score, np.inf).argmin())
        m, M = score[i], score[j]
        if m - M <= tol:
            break
        it += 1
        ki = cache.row(i)
        kj = cache.row(j)
        eta = max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12)
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / eta
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0 and aj < 0:
                ai, aj = diff, 0.0
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                ai, aj = C + diff, C
        else:
            delta = (grad[i] - grad[j]) / eta
            s = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if s > C and ai > C:
                ai, aj = C, s - C
            elif s <= C and aj < 0:
                ai, aj = s, 0.0
            if s > C and aj > C:
                ai, aj = s - C, C
            elif s <= C and ai < 0:
                ai, aj = 0.0, s
        alpha[i], alpha[j] = ai, aj
        grad += (y[i] * y * ki) * (ai - old_i) + (y[j] * y * kj) * (aj - old_j)
    return alpha, m, M, it


def train_csvc(X, y, C: float = 2.0, gamma: float = 0.4,
               tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               full_gram_limit: int = FULL_GRAM_LIMIT,
               cache_rows: int = 512) -> SvmModel:
    """Train one c-SVC model on features X (N, Q) and labels y.

    Stops when the maximal KKT violation m - M drops below tol; only
    points with positive dual coefficient are stored.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = _as_pm1(y)
    if X.shape[0] != y.size:
        raise DimensionError(f"{X.shape[0]} rows vs {y.size} labels")
    if X.shape[0] < 2:
        raise InsufficientData("need at least 2 training points")
    if C <= 0 or gamma <= 0:
        raise DimensionError("C and gamma must be positive")

    n = X.shape[0]
    if n <= full_gram_limit:
        K = rbf_gram(X, X, gamma)
        alpha, m, M, _ = _kernels.smo_solve(K, y, float(C), float(tol), int(max_iter))
        u = (alpha * y) @ K
    else:
        alpha, m, M, _ = _smo_cached(X, y, gamma, float(C), tol, max_iter, cache_rows)
        sv_mask0 = alpha > 0
        u = (alpha[sv_mask0] * y[sv_mask0]) @ rbf_gram(X[sv_mask0], X, gamma)

    eps = 1e-8 * C
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        bias = float(np.mean(y[free] - u[free]))
    else:
        bias = float((m + M) / 2.0)

    sv = alpha > 0
    if not sv.any():
        # fully non-separable degenerate corner; keep the closest point
        sv = np.zeros(n, dtype=bool)
        sv[0] = True
    return SvmModel(support_vectors=X[sv].copy(),
                    alphas_signed=(alpha[sv] * y[sv]).copy(),
                    bias=bias, gamma=float(gamma), box=float(C))


def decision(model: SvmModel, x) -> float:
    """Signed score sum_m alpha_m y_m K(sv_m, x) + bias."""
    if isinstance(x, FeatureVector):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(decision_matrix(model, x[None, :])[0])
    raise DimensionError("decision takes a single feature vector; use decision_matrix")


def decision_matrix(model: SvmModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.support_vectors.shape[1]:
        raise DimensionError(
            f"feature dimension {X.shape[1]} != model dimension "
            f"{model.support_vectors.shape[1]}")
    K = rbf_gram(X, model.support_vectors, model.gamma)
    return K @ model.alphas_signed + model.bias


def predict(model: SvmModel, x) -> int:
    """Hard label in {0,1}; a score of exactly 0 maps to reliable (1)."""
    return 1 if decision(model, x) >= 0 else 0


def fold_indices(n: int, n_folds: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic shuffled split of range(n) into n_folds near-equal folds."""
    if n < n_folds:
        raise InsufficientData(f"cannot make {n_folds} folds from {n} points")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, n_folds)]


def train_ensemble(X, y, n_folds: int = 10, C: float = 2.0, gamma: float = 0.4,
                   tol: float = DEFAULT_TOL, seed: int = 0,
                   pca: PcaModel | None = None, radius: int = 3,
                   sigma: float = 10.0) -> SvmEnsemble:
    """Train n_folds models, each on the data with one fold held out.

    n_folds=1 degenerates to a single model trained on everything.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = _as_pm1(y)
    if n_folds == 1:
        members = [train_csvc(X, y, C=C, gamma=gamma, tol=tol)]
    else:
        folds = fold_indices(X.shape[0], n_folds, seed=seed)
        members = []
        for k in range(n_folds):
            keep = np.setdiff1d(np.arange(X.shape[0]), folds[k])
            members.append(train_csvc(X[keep], y[keep], C=C, gamma=gamma, tol=tol))
    return SvmEnsemble(members=members, pca=pca, radius=radius, sigma=sigma)


def ensemble_scores(ensemble: SvmEnsemble, X: np.ndarray) -> np.ndarray:
    """Sum of member decision scores for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    total = np.zeros(X.shape[0])
    for member in ensemble.members:
        total += decision_matrix(member, X)
    return total


def predict_ensemble(ensemble: SvmEnsemble, x) -> int:
    """Label from the sign of the summed member scores; ties are reliable."""
    if isinstance(x, FeatureVector):
        x = x.values
    score = ensemble_scores(ensemble, np.asarray(x, dtype=np.float64)[None, :])[0]
    return 1 if score >= 0 else 0


def predict_ensemble_matrix(ensemble: SvmEnsemble, X: np.ndarray) -> np.ndarray:
    return (ensemble_scores(ensemble, X) >= 0).astype(np.int8)


def grid_search(X, y, C_grid, gamma_grid, n_folds: int = 10,
                seed: int = 0) -> tuple[float, float, float]:
    """Pick (C, gamma) minimizing K-fold cross-validation error.

    Ties break toward smaller C, then smaller gamma.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = _as_pm1(y)
    if len(C_grid) == 0 or len(gamma_grid) == 0:
        raise InsufficientData("empty parameter grid")
    folds = fold_indices(X.shape[0], n_folds, seed=seed) if n_folds > 1 else None
    best = None
    for C in sorted(C_grid):
        for gamma in sorted(gamma_grid):
            errors = 0
            total = 0
            if folds is None:
                model = train_csvc(X, y, C=C, gamma=gamma)
                pred = np.where(decision_matrix(model, X) >= 0, 1.0, -1.0)
                errors = int((pred != y).sum())
                total = y.size
            else:
                for k, fold in enumerate(folds):
                    keep = np.setdiff1d(np.arange(X.shape[0]), fold)
                    if len(set(y[keep])) < 2:
                        continue
                    model = train_csvc(X[keep], y[keep], C=C, gamma=gamma)
                    pred = np.where(decision_matrix(model, X[fold]) >= 0, 1.0, -1.0)
                    errors += int((pred != y[fold]).sum())
                    total += fold.size
            cv_error = errors / max(total, 1)
            if best is None or cv_error < best[2] - 1e-15:
                best = (float(C), float(gamma), cv_error)
    return best


def dual_objective(model_or_alpha, K: np.ndarray, y: np.ndarray) -> float:
    """0.5 a^T Q a - sum(a) for a dual point; used to compare solvers."""
    alpha = np.asarray(model_or_alpha, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())
