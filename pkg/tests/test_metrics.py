import numpy as np
import pytest
from scipy import integrate, stats

from lcic.metrics import (InconsistentSamplerError, KlBoundParams, McEstimate, TvBoundParams,
                          gaussian_hellinger_sq, gaussian_logpdf, gaussian_rotation_kl,
                          gaussian_sampler, hellinger_sq_mc, kl_domination_suite, kl_stability_bound,
                          plane_rotation, tensorized_hellinger, tv_mc, tv_stability_bound)
from lcic.rng import RngState


def normal_1d(var, mean=0.0):
    return gaussian_logpdf([mean], [[var]]), gaussian_sampler([mean], [[var]])


def rot2(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def test_same_density_zero():
    lp, sp = normal_1d(1.0)
    est = hellinger_sq_mc(lp, lp, sp, 1000, 5, RngState(0))
    assert est.value == 0.0 and est.std_error == 0.0
    assert tv_mc(lp, lp, sp, 1000, 5, RngState(0)).value == 0.0


def test_hellinger_defaults():
    import inspect
    sig = inspect.signature(hellinger_sq_mc)
    assert sig.parameters["K"].default == 10_000 and sig.parameters["repeats"].default == 50


def test_hellinger_outside_support():
    lp, sp = normal_1d(1.0)
    never = lambda x: np.full(len(x), -np.inf)
    assert hellinger_sq_mc(lp, never, sp, 200, 3, RngState(0)).value == 1.0
    assert hellinger_sq_mc(lp, never, sp, 200, 3, RngState(0), form="literal").value == 0.5
    with pytest.raises(ValueError):
        hellinger_sq_mc(lp, lp, sp, 200, 3, form="other")


def test_hellinger_forms_agree_on_light_tailed_q():
    lp, sp = normal_1d(4.0)
    lq, _ = normal_1d(1.0, 0.3)
    a = hellinger_sq_mc(lp, lq, sp, 10_000, 20, RngState(1))
    b = hellinger_sq_mc(lp, lq, sp, 10_000, 20, RngState(1), form="literal")
    truth = gaussian_hellinger_sq([0.0], [[4.0]], [0.3], [[1.0]])
    assert abs(a.value - truth) <= 4 * a.std_error
    assert abs(b.value - truth) <= 4 * b.std_error


def test_inconsistent_sampler():
    lp, _ = normal_1d(1.0)
    with pytest.raises(InconsistentSamplerError):
        hellinger_sq_mc(lambda x: np.full(len(x), -np.inf), lp, lambda n, r: np.zeros((n, 1)), 200, 2)
    with pytest.raises(ValueError):
        hellinger_sq_mc(lp, lp, lambda n, r: np.zeros((n, 1)), 10, 2)


def test_hellinger_symmetry_in_expectation():
    lp, sp = normal_1d(1.0)
    lq, sq = normal_1d(2.0, 0.5)
    a = hellinger_sq_mc(lp, lq, sp, 10_000, 20, RngState(1))
    b = hellinger_sq_mc(lq, lp, sq, 10_000, 20, RngState(2))
    assert abs(a.value - b.value) <= 4 * np.hypot(a.std_error, b.std_error)


def test_spread_rule():
    assert McEstimate(0.1, 0.009, 100, 5).spread_ok
    assert not McEstimate(0.1, 0.02, 100, 5).spread_ok
    assert McEstimate(0.001, 0.0015, 100, 5).spread_ok


def test_gaussian_closed_form_vs_quadrature():
    f = lambda x: np.sqrt(stats.norm.pdf(x, 0, 1) * stats.norm.pdf(x, 0, 2))
    bc, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14)
    assert gaussian_hellinger_sq([0.0], [[1.0]], [0.0], [[4.0]]) == pytest.approx(1 - bc, abs=1e-12)
    assert gaussian_hellinger_sq([0.0], [[1.0]], [0.0], [[4.0]]) == pytest.approx(1 - np.sqrt(0.8), abs=1e-15)
    assert gaussian_hellinger_sq([1.0, 2.0], np.eye(2), [1.0, 2.0], np.eye(2)) == 0.0
    with pytest.raises(np.linalg.LinAlgError):
        gaussian_hellinger_sq([0.0, 0.0], np.zeros((2, 2)), [0.0, 0.0], np.eye(2))


def test_tensorized_examples():
    assert tensorized_hellinger([0.0, 0.0]) == (0.0, 0.0)
    v, b = tensorized_hellinger([0.1, 0.1])
    assert v == pytest.approx(0.19, abs=1e-15) and b == pytest.approx(0.2)
    h1 = gaussian_hellinger_sq([0.0], [[1.0]], [0.5], [[4.0]])
    h2 = gaussian_hellinger_sq([1.0], [[2.0]], [1.0], [[3.0]])
    full = gaussian_hellinger_sq([0.0, 1.0], np.diag([1.0, 2.0]), [0.5, 1.0], np.diag([4.0, 3.0]))
    assert tensorized_hellinger([h1, h2])[0] == pytest.approx(full, abs=1e-12)
    with pytest.raises(ValueError):
        tensorized_hellinger([1.5])


def test_tensorized_bound_property(np_rng):
    for _ in range(200):
        h = np_rng.uniform(size=np_rng.integers(1, 8))
        v, b = tensorized_hellinger(h)
        assert v <= b + 1e-15


def test_tv_normal_shift():
    lp, sp = normal_1d(1.0)
    lq, _ = normal_1d(1.0, 1.0)
    est = tv_mc(lp, lq, sp, 10_000, 50, RngState(3))
    truth = 2 * stats.norm.cdf(0.5) - 1
    assert abs(est.value - truth) <= 4 * est.std_error


def test_tv_disjoint():
    lp, sp = normal_1d(1.0)
    lq, _ = normal_1d(1.0, 100.0)
    assert tv_mc(lp, lq, sp, 1000, 5, RngState(4)).value == pytest.approx(1.0, abs=1e-12)


def test_rotation_kl_examples():
    assert gaussian_rotation_kl(np.diag([6.0, 3.0]), np.eye(2)) == 0.0
    assert gaussian_rotation_kl(np.eye(2), rot2(0.7)) == pytest.approx(0.0, abs=1e-15)


def test_rotation_kl_monte_carlo():
    sigma = np.diag([6.0, 3.0])
    r = rot2(0.1)
    kl = gaussian_rotation_kl(sigma, r)
    lp = gaussian_logpdf([0.0, 0.0], sigma)
    lq = gaussian_logpdf([0.0, 0.0], r.T @ sigma @ r)
    x = gaussian_sampler([0.0, 0.0], sigma)(10_000_000, RngState(5))
    terms = lp(x) - lq(x)
    se = terms.std() / np.sqrt(terms.size)
    assert abs(terms.mean() - kl) <= 3 * se


def test_kl_bound_examples():
    assert kl_stability_bound(KlBoundParams(1.0, 1.0, 2, 6.0, 0.0)) == 0.0
    assert kl_stability_bound(KlBoundParams(1.0, 1.0, 1, 1.0, 1.0)) == 1.0
    dev = np.linalg.norm(np.eye(2) - rot2(0.1), 2)
    bound = kl_stability_bound(KlBoundParams(1 / 3, 1.0, 2, 6.0, dev))
    assert bound == pytest.approx((1 / 3) * 2 * 6 * dev**2, rel=1e-14)
    assert bound == pytest.approx(0.0399, abs=1e-3)
    assert gaussian_rotation_kl(np.diag([6.0, 3.0]), rot2(0.1)) == pytest.approx(0.00249, abs=5e-5)
    with pytest.raises(ValueError):
        KlBoundParams(1.0, 0.0, 2, 1.0, 1.0)


def test_tv_bound_examples():
    assert tv_stability_bound(TvBoundParams(1.0, 1.0, 2, 6.0, 0.0)) == 0.0
    assert tv_stability_bound(TvBoundParams(0.0, 1.0, 1, 1.0, 1.0)) == 0.5
    sigma = np.diag([6.0, 3.0])
    r = rot2(0.1)
    bound = tv_stability_bound(TvBoundParams(np.sqrt(2 / 3), 1.0, 2, 6.0, np.linalg.norm(np.eye(2) - r, 2)))
    est = tv_mc(gaussian_logpdf([0, 0], sigma), gaussian_logpdf([0, 0], r @ sigma @ r.T),
                gaussian_sampler([0, 0], sigma), 10_000, 20, RngState(6))
    assert est.value - 4 * est.std_error <= bound
    with pytest.raises(ValueError):
        TvBoundParams(-1.0, 1.0, 1, 1.0, 1.0)


def test_plane_rotation_is_rotation():
    r = plane_rotation(5, 0.25, RngState(7))
    assert np.allclose(r @ r.T, np.eye(5), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0)
    assert np.linalg.norm(np.eye(5) - r, 2) == pytest.approx(2 * np.sin(0.125), rel=1e-10)


def test_kl_suite_small():
    recs = kl_domination_suite(20, RngState(8))
    assert len(recs) == 20 and not any(r["violated"] for r in recs)
