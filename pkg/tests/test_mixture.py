import numpy as np
import pytest

from lcic.estimator import ProductEstimate
from lcic.logconcave import LogConcave1D, WeightedPoints, fit_logconcave_1d
from lcic.mixture import (ComponentCollapseError, MixtureModel, assign_clusters, clustering_accuracy,
                          em_fit, posterior, refit_component)
from lcic.rng import RngState
from lcic.simulate import gaussian_model


def box(center, half=1.0):
    """Product of uniform densities on a square."""
    c = np.asarray(center, dtype=float)
    m = LogConcave1D([-half, half], [-np.log(2 * half)] * 2)
    return ProductEstimate(c, np.eye(c.size), [m] * c.size)


def two_blobs(seed, n=1000):
    r = RngState(seed)
    a = gaussian_model([2.0, 1.0], r, mean=[5.0, 5.0])
    b = gaussian_model([2.0, 1.0], r, mean=[-5.0, -5.0])
    x = np.vstack([a.sample(n // 2, r), b.sample(n - n // 2, r)])
    return x, np.repeat([0, 1], [n // 2, n - n // 2])


def test_model_validation():
    with pytest.raises(ValueError):
        MixtureModel([0.5, 0.6], [box([0, 0]), box([1, 1])])
    with pytest.raises(ValueError):
        MixtureModel([1.0], [box([0, 0]), box([1, 1])])


def test_posterior_k1():
    model = MixtureModel([1.0], [box([0.0, 0.0])])
    resp = posterior(model, np.array([[0.1, 0.2], [0.5, -0.5]]))
    assert np.all(resp.theta == 1.0)


def test_posterior_separated_and_flagged():
    a = ProductEstimate([5.0, 5.0], np.eye(2), [fit_logconcave_1d(RngState(1).normal(500))] * 2)
    b = ProductEstimate([-5.0, -5.0], np.eye(2), [fit_logconcave_1d(RngState(2).normal(500))] * 2)
    model = MixtureModel([0.5, 0.5], [a, b])
    resp = posterior(model, np.array([[5.0, 5.0], [100.0, 100.0]]))
    assert resp.theta[0, 0] >= 0.999
    assert resp.flagged.tolist() == [False, True]
    assert np.allclose(resp.theta[1], 0.5)
    assert np.allclose(resp.theta.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(resp.theta >= 1e-7 * 0.999)


def test_posterior_equal_components():
    c = box([0.0, 0.0])
    model = MixtureModel([0.5, 0.5], [c, c])
    theta = posterior(model, RngState(3).uniform(20).reshape(10, 2) - 0.5).theta
    assert np.allclose(theta, 0.5, atol=1e-10)
    assert np.all(assign_clusters(model, np.zeros((3, 2))) == 0)


def test_assign_center_and_permutation():
    a, b = box([3.0, 0.0]), box([-3.0, 0.0])
    x = np.array([[3.0, 0.1], [-3.0, 0.2], [2.5, -0.5]])
    m1 = MixtureModel([0.4, 0.6], [a, b])
    m2 = MixtureModel([0.6, 0.4], [b, a])
    assert assign_clusters(m1, x).tolist() == [0, 1, 0]
    assert np.array_equal(assign_clusters(m2, x), 1 - assign_clusters(m1, x))


def test_accuracy_examples():
    t = np.array([0, 0, 1, 1, 1, 0])
    assert clustering_accuracy(t, t) == 1.0
    assert clustering_accuracy(1 - t, t) == 1.0
    assert clustering_accuracy(np.zeros(6), t) == 0.5
    assert clustering_accuracy([0, 1, 2, 2], [5, 5, 7, 7]) == 0.75
    with pytest.raises(ValueError):
        clustering_accuracy([0, 1], [0])


def test_em_two_blobs():
    x, y = two_blobs(0)
    model = em_fit(x, 2, iters=10, rng=RngState(0, 1))
    assert clustering_accuracy(assign_clusters(model, x), y) >= 0.95
    assert abs(model.weights.sum() - 1.0) <= 1e-12
    assert len(model.loglik_trace) == 10


def test_em_hard_label_init_and_determinism():
    x, y = two_blobs(1, 300)
    m1 = em_fit(x, 2, iters=3, resample_factor=2, init=y, rng=RngState(5))
    m2 = em_fit(x, 2, iters=3, resample_factor=2, init=y, rng=RngState(5))
    assert m1.loglik_trace == m2.loglik_trace
    assert clustering_accuracy(assign_clusters(m1, x), y) >= 0.95
    with pytest.raises(ValueError):
        em_fit(x, 2, init=np.zeros(5))
    with pytest.raises(ValueError):
        em_fit(x, 2, init="kmeans")


def test_em_single_component_matches_direct_fit():
    truth = gaussian_model([4.0, 1.0], RngState(6))
    x = truth.sample(800, RngState(7))
    model = em_fit(x, 1, iters=2, rng=RngState(8))
    # the bootstrap refit sees every data point, so the likelihood is finite
    # and close to the truth's (a plain split fit may leave points off-support)
    per_sample = (model.loglik(x) - np.sum(truth.logpdf(x))) / len(x)
    assert np.isfinite(model.loglik(x)) and abs(per_sample) < 0.1


def test_em_preconditions():
    with pytest.raises(ValueError):
        em_fit(np.zeros((5, 2)), 2)
    with pytest.raises(ValueError):
        em_fit(np.zeros((50, 2)), 0)


def test_component_collapse():
    x = RngState(1).normal(40).reshape(20, 2)
    w = np.zeros(20)
    w[:3] = 1.0
    with pytest.raises(ComponentCollapseError) as info:
        refit_component(x, w, 4, RngState(2), index=1)
    assert info.value.component == 1


def test_resampling_approximates_weighted_mle():
    r = RngState(10)
    x = r.normal(300)
    w = r.uniform(300) + 0.1
    data = WeightedPoints.from_samples(x, w)
    direct = fit_logconcave_1d(data)
    idx = r.choice_weighted(w, 100 * 300)
    heuristic = fit_logconcave_1d(x[idx])
    gap = direct.loglik(data) - heuristic.loglik(data)
    assert 0.0 <= gap <= 0.01
