import numpy as np
import pytest
from scipy import stats

from lcic.rng import RngState
from lcic.simulate import (GroundTruthModel, MarginalSpec, eval_ground_truth_logdensity,
                           gamma_model, gaussian_model, haar_orthogonal, sample_ground_truth)


@pytest.mark.parametrize("d", [1, 2, 3, 7])
def test_haar_orthogonal(d):
    w = haar_orthogonal(d, RngState(d))
    assert np.allclose(w @ w.T, np.eye(d), atol=1e-10)


def test_haar_reproducible_and_d1_signs():
    assert np.array_equal(haar_orthogonal(4, RngState(1)), haar_orthogonal(4, RngState(1)))
    signs = [haar_orthogonal(1, RngState(s))[0, 0] for s in range(400)]
    assert set(signs) == {-1.0, 1.0}
    assert abs(np.mean(signs)) < 0.2


def test_haar_entry_mean():
    rng = RngState(11)
    vals = np.array([haar_orthogonal(2, rng)[0, 0] for _ in range(100_000)])
    assert abs(vals.mean()) < 0.01


def test_marginal_validation():
    with pytest.raises(ValueError):
        MarginalSpec.normal(0.0)
    with pytest.raises(ValueError):
        MarginalSpec.gamma(0.5)
    with pytest.raises(ValueError):
        MarginalSpec.gamma(2.0, scale=-1.0)


def test_sample_covariance_identity():
    model = gaussian_model([1.0, 1.0, 1.0], frame=np.eye(3))
    x = sample_ground_truth(model, 100_000, RngState(0))
    cov = np.cov(x.T)
    assert np.linalg.norm(cov - np.eye(3), 2) < 0.05


def test_sample_mean_shift():
    model = gaussian_model([1.0, 1.0], frame=np.eye(2), mean=[3.0, -1.0])
    x = sample_ground_truth(model, 10_000, RngState(1))
    assert np.allclose(x.mean(axis=0), [3.0, -1.0], atol=0.1)


def test_single_row():
    x = sample_ground_truth(gaussian_model([2.0, 1.0], RngState(0)), 1, RngState(2))
    assert x.shape == (1, 2) and np.all(np.isfinite(x))


def test_logdensity_standard_normal_origin():
    model = gaussian_model([1.0, 1.0], frame=np.eye(2))
    assert eval_ground_truth_logdensity(model, np.zeros(2)) == pytest.approx(-np.log(2 * np.pi), abs=1e-12)


def test_logdensity_gamma_outside_support():
    model = gamma_model([6.0], centered=True)
    assert eval_ground_truth_logdensity(model, np.array([-6.5])) == -np.inf
    assert np.isfinite(eval_ground_truth_logdensity(model, np.array([0.0])))


def test_isotropic_rotation_invariance():
    model = gaussian_model([2.0, 2.0, 2.0], frame=np.eye(3))
    r = haar_orthogonal(3, RngState(5))
    x = RngState(6).normal(30).reshape(10, 3)
    assert np.allclose(model.logpdf(x), model.logpdf(x @ r.T), atol=1e-10)


def test_logdensity_matches_scipy_gaussian():
    model = gaussian_model([6.0, 3.0], RngState(3), mean=[1.0, 2.0])
    x = RngState(4).normal(20).reshape(10, 2)
    ref = stats.multivariate_normal(model.mean, model.covariance).logpdf(x)
    assert np.allclose(model.logpdf(x), ref, atol=1e-10)


@pytest.mark.parametrize("model", [
    gaussian_model([6.0, 3.0], RngState(7)),
    gamma_model([6.0, 3.0], frame=haar_orthogonal(2, RngState(8)), mean=[1.0, -1.0]),
])
def test_projected_marginals_ks(model):
    x = model.sample(100_000, RngState(9))
    z = (x - model.mean) @ model.frame.T
    for i, m in enumerate(model.marginals):
        assert stats.kstest(z[:, i], m.cdf).pvalue > 1e-3


def test_centered_gamma_mean_zero():
    m = MarginalSpec.gamma(6.0, 1.0, centered=True)
    assert m.mean == 0.0
    assert abs(m.sample(100_000, RngState(1)).mean()) < 0.03


def test_frame_validation():
    with pytest.raises(ValueError):
        GroundTruthModel(np.array([[1.0, 0.1], [0.0, 1.0]]), [MarginalSpec.normal()] * 2)
