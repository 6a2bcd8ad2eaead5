import warnings

import numpy as np
import pytest

from lcic.rng import RngState
from lcic.simulate import gaussian_model, haar_orthogonal
from lcic.unmixing import (DegenerateSpectrumWarning, FourierPcaConfig, align_frames, center,
                           empirical_covariance, fourier_pca_unmixing, pca_unmixing,
                           symmetric_eigen)


def test_center_examples():
    mu, c = center([[1.0, 1.0], [3.0, 3.0]])
    assert np.array_equal(mu, [2.0, 2.0])
    assert np.array_equal(c, [[-1.0, -1.0], [1.0, 1.0]])
    _, one = center([[4.0, 5.0]])
    assert np.array_equal(one, [[0.0, 0.0]])
    with pytest.raises(ValueError):
        center(np.empty((0, 2)))


def test_center_column_means(np_rng):
    _, c = center(np_rng.normal(size=(500, 4)) + 7)
    assert np.all(np.abs(c.mean(axis=0)) < 1e-12)


def test_covariance_examples():
    assert np.array_equal(empirical_covariance([[1.0, 2.0]]), [[1.0, 2.0], [2.0, 4.0]])
    y = np.array([[1.0, -2.0, 0.5]])
    assert np.allclose(empirical_covariance(np.vstack([y, -y])), y.T @ y)


def test_covariance_concentration():
    errs = []
    for seed in range(5):
        truth = gaussian_model([6.0, 3.0], RngState(seed))
        x = truth.sample(10_000, RngState(seed, 1))
        errs.append(np.linalg.norm(empirical_covariance(center(x)[1]) - truth.covariance, 2))
    assert np.mean(errs) <= 0.4


def test_eigen_identity_and_diagonal():
    e = symmetric_eigen(np.eye(3))
    assert np.allclose(e.eigenvalues, 1.0)
    assert np.allclose(e.eigenvectors @ e.eigenvectors.T, np.eye(3), atol=1e-10)
    e = symmetric_eigen(np.diag([3.0, 6.0]))
    assert np.allclose(e.eigenvalues, [6.0, 3.0])
    assert np.allclose(e.eigenvectors, [[0.0, 1.0], [1.0, 0.0]])


@pytest.mark.parametrize("d", [2, 5, 12])
def test_eigen_residual_and_reconstruction(d, np_rng):
    a = np_rng.normal(size=(d, d))
    a = a + a.T
    e = symmetric_eigen(a)
    v, lam = e.eigenvectors, e.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert np.allclose(v @ v.T, np.eye(d), atol=1e-10)
    for i in range(d):
        assert np.linalg.norm(a @ v[i] - lam[i] * v[i]) <= 1e-8 * (1 + abs(lam[i]))
    assert np.linalg.norm(v.T @ np.diag(lam) @ v - a) <= 1e-9
    assert np.allclose(lam, np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-10)
    # sign convention
    idx = np.argmax(np.abs(v), axis=1)
    assert np.all(v[np.arange(d), idx] > 0)


def test_spectrum_invariant_under_rotation(np_rng):
    a = np_rng.normal(size=(4, 4))
    sigma = a @ a.T
    w = haar_orthogonal(4, RngState(3))
    l1 = symmetric_eigen(sigma).eigenvalues
    l2 = symmetric_eigen(w @ sigma @ w.T).eigenvalues
    assert np.allclose(l1, l2, atol=1e-9)


def test_pca_axis_aligned(np_rng):
    x = np_rng.normal(size=(20_000, 3)) * np.sqrt([9.0, 4.0, 1.0])
    frame, eig = pca_unmixing(center(x)[1])
    assert align_frames(frame, np.eye(3)).max_error <= 0.05
    cov = empirical_covariance(center(x)[1])
    rot = frame @ cov @ frame.T
    assert np.max(np.abs(rot - np.diag(np.diag(rot)))) <= 1e-8 * np.trace(cov)


def test_pca_degenerate_warns():
    # corners of the cube: covariance exactly I
    x = np.array(np.meshgrid([-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0])).reshape(3, -1).T
    with pytest.warns(DegenerateSpectrumWarning):
        _, eig = pca_unmixing(center(x)[1])
    assert eig.degenerate and eig.eigengap < 1e-12


def test_pca_needs_enough_rows():
    with pytest.raises(ValueError):
        pca_unmixing(np.zeros((2, 3)))


def test_pca_error_shrinks_with_m():
    def median_err(m):
        errs = []
        for seed in range(10):
            truth = gaussian_model([15.0, 14.0], RngState(seed))
            x = center(truth.sample(m, RngState(seed, 9)))[1]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                errs.append(align_frames(pca_unmixing(x)[0], truth.frame).max_error)
        return np.median(errs)

    assert median_err(50_000) < median_err(2_000)


def test_fourier_cube_and_orthonormal():
    rng = RngState(21)
    x = (rng.uniform(3 * 50_000).reshape(-1, 3) - 0.5) * 2 * np.sqrt(3.0)
    frame = fourier_pca_unmixing(center(x)[1], FourierPcaConfig(), RngState(22))
    assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-10)
    assert align_frames(frame, np.eye(3)).max_error <= 0.2


def test_fourier_d1_and_config():
    assert np.array_equal(fourier_pca_unmixing(np.arange(5.0)[:, None]), [[1.0]])
    with pytest.raises(ValueError):
        FourierPcaConfig(probe_scale=0.0)


def test_fourier_gaussian_still_orthonormal(np_rng):
    x = np_rng.normal(size=(2000, 4))
    frame = fourier_pca_unmixing(x, FourierPcaConfig(mu4=3.0), RngState(1))
    assert np.allclose(frame @ frame.T, np.eye(4), atol=1e-10)


def test_align_identity_and_permuted():
    w = haar_orthogonal(4, RngState(1))
    a = align_frames(w, w)
    assert np.array_equal(a.permutation, np.arange(4)) and np.all(a.signs == 1) and a.max_error == 0
    est = w[[1, 0, 2, 3]].copy()
    est[0] *= -1
    a = align_frames(est, w)
    assert a.max_error == 0.0
    assert list(a.permutation) == [1, 0, 2, 3]


def test_align_rotated_row():
    w = np.eye(3)
    est = w.copy()
    est[0] = np.cos(0.1) * w[0] + np.sin(0.1) * w[1]
    q, r = np.linalg.qr(est.T)
    est = (q * np.sign(np.diag(r))).T
    a = align_frames(est, w)
    direct = max(np.linalg.norm(est[i] - w[i]) for i in range(3))
    assert a.max_error == pytest.approx(direct, abs=1e-12)


def test_align_invariance(np_rng):
    w = haar_orthogonal(5, RngState(2))
    est = haar_orthogonal(5, RngState(3))
    base = align_frames(est, w).max_error
    perm = np_rng.permutation(5)
    signs = np_rng.choice([-1.0, 1.0], size=5)
    assert align_frames(est[perm] * signs[:, None], w).max_error == pytest.approx(base, abs=1e-12)


def test_align_dimension_mismatch():
    with pytest.raises(ValueError):
        align_frames(np.eye(2), np.eye(3))
