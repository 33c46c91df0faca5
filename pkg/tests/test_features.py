"""PCA fitting and projection against a brute-force eigendecomposition oracle."""

import numpy as np
import pytest

from bedrr.errors import DimensionError, InsufficientData
from bedrr.features import fit_pca, project, project_matrix, reconstruct


def oracle_eig(X):
    """Independent covariance eigendecomposition (general solver + sort)."""
    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1)
    vals, vecs = np.linalg.eig(cov)
    vals = vals.real
    vecs = vecs.real
    order = np.argsort(vals)[::-1]
    return mean, vals[order], vecs[:, order]


def principal_angles(A, B):
    """Angles between the row spaces of two orthonormal-row matrices."""
    s = np.linalg.svd(A @ B.T, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


class TestFitPca:
    def test_line_in_3d_gives_one_component(self):
        rng = np.random.default_rng(0)
        t = rng.standard_normal(200)
        direction = np.array([1.0, -2.0, 0.5])
        X = np.outer(t, direction)
        model = fit_pca(X, variance_fraction=0.95)
        assert model.n_components == 1

    def test_isotropic_4d_keeps_all(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((500, 4))
        model = fit_pca(X, variance_fraction=0.95)
        # oracle on the same sample: all four eigenvalues are comparable,
        # so three of them cannot reach 95% of the total
        _, vals, _ = oracle_eig(X)
        assert vals[:3].sum() / vals.sum() < 0.95
        assert model.n_components == 4

    def test_explicit_component_override(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((300, 70))
        model = fit_pca(X, n_components=15)
        assert model.basis.shape == (15, 70)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            fit_pca(np.ones((1, 3)))

    def test_bad_fraction(self):
        with pytest.raises(DimensionError):
            fit_pca(np.random.default_rng(0).standard_normal((10, 3)),
                    variance_fraction=1.5)

    def test_matches_oracle_on_small_instances(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            dim = int(rng.integers(3, 21))
            n = int(rng.integers(50, 200))
            # well-separated spectrum so the subspace comparison is stable
            scales = 2.0 ** np.arange(dim, 0, -1)
            basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            X = (rng.standard_normal((n, dim)) * scales) @ basis.T
            model = fit_pca(X, variance_fraction=0.99)
            mean, vals, vecs = oracle_eig(X)
            q = model.n_components
            np.testing.assert_allclose(model.eigenvalues, vals[:q],
                                       rtol=1e-8, atol=1e-10)
            angles = principal_angles(model.basis, vecs[:, :q].T)
            assert angles.max() <= 1e-6
            np.testing.assert_allclose(model.mean, mean, atol=1e-12)

    def test_retained_variance_reaches_fraction(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((200, 12)) * (1 + np.arange(12))
        model = fit_pca(X, variance_fraction=0.95)
        _, vals, _ = oracle_eig(X)
        assert model.eigenvalues.sum() / vals.sum() >= 0.95

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((100, 8)) * (1 + np.arange(8))
        model = fit_pca(X, variance_fraction=0.999)
        gram = model.basis @ model.basis.T
        np.testing.assert_allclose(gram, np.eye(model.n_components), atol=1e-8)

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((100, 6)) * (1 + np.arange(6))
        model = fit_pca(X)
        for row in model.basis:
            assert row[np.argmax(np.abs(row))] > 0


class TestProject:
    def _model(self, seed=0, dim=8):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((150, dim)) * (1 + np.arange(dim))
        return fit_pca(X, variance_fraction=0.9), X

    def test_mean_projects_to_zero(self):
        model, _ = self._model()
        feat = project(model, model.mean)
        np.testing.assert_allclose(feat.values, 0.0, atol=1e-12)

    def test_eigenvector_projects_to_unit(self):
        model, _ = self._model()
        feat = project(model, model.mean + model.basis[0])
        expected = np.zeros(model.n_components)
        expected[0] = 1.0
        np.testing.assert_allclose(feat.values, expected, atol=1e-8)

    def test_reconstruction_residual_equals_dropped_variance(self):
        model, X = self._model(seed=7, dim=10)
        feats = project_matrix(model, X)
        recon = reconstruct(model, feats)
        mean_sq = float(np.mean(((X - recon) ** 2).sum(axis=1)))
        _, vals, _ = oracle_eig(X)
        dropped = vals[model.n_components:].sum()
        n = X.shape[0]
        np.testing.assert_allclose(mean_sq, dropped * (n - 1) / n, rtol=1e-8)

    def test_projected_training_mean_is_zero(self):
        model, X = self._model(seed=8)
        feats = project_matrix(model, X)
        np.testing.assert_allclose(feats.mean(axis=0), 0.0, atol=1e-8)

    def test_dimension_mismatch(self):
        model, _ = self._model()
        with pytest.raises(DimensionError):
            project(model, np.zeros(5))
