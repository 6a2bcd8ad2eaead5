"""Finite mixtures of LC-IC components fitted by EM with re-sampling.

The M-step does not maximise a weighted likelihood directly.  Each component
is refitted with :func:`~lcic.estimator.fit_lcic` on i.i.d. draws from the
responsibility-weighted empirical distribution of the data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .estimator import ProductEstimate, fit_lcic
from .rng import RngState, as_rng

THETA_FLOOR = 1e-7
DEFAULT_RESAMPLE = 4


class ComponentCollapseError(RuntimeError):
    def __init__(self, component, distinct, needed):
        super().__init__(f"component {component} collapsed: {distinct} distinct re-samples, need {needed}")
        self.component = component


@dataclass
class MixtureModel:
    weights: np.ndarray
    components: list
    loglik_trace: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.size != len(self.components) or self.weights.size == 0:
            raise ValueError("need one weight per component")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")

    @property
    def K(self) -> int:
        return self.weights.size

    def component_logpdf(self, samples) -> np.ndarray:
        """``(n, K)`` matrix of ``log pi_k + log p_k(x_j)``."""
        x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        return np.column_stack([logw[k] + c.log_density(x) for k, c in enumerate(self.components)])

    def log_density(self, samples) -> np.ndarray:
        return logsumexp(self.component_logpdf(samples), axis=1)

    def loglik(self, samples) -> float:
        return float(np.sum(self.log_density(samples)))


@dataclass
class Responsibilities:
    theta: np.ndarray
    flagged: np.ndarray  # rows outside every component's support


def _floor_rows(theta):
    theta = np.maximum(theta, THETA_FLOOR)
    return theta / theta.sum(axis=1, keepdims=True)


def posterior(model: MixtureModel, samples) -> Responsibilities:
    """Posterior component probabilities, floored at 1e-7 and renormalised."""
    lp = model.component_logpdf(samples)
    row_max = lp.max(axis=1)
    flagged = np.isneginf(row_max)
    safe = np.where(flagged[:, None], 0.0, lp - np.where(flagged, 0.0, row_max)[:, None])
    theta = np.exp(safe)
    theta[flagged] = 1.0
    theta /= theta.sum(axis=1, keepdims=True)
    return Responsibilities(_floor_rows(theta), flagged)


def _initial_theta(n, K, init, rng):
    if isinstance(init, str):
        if init != "random":
            raise ValueError("init must be 'random' or an array of hard labels")
        return _floor_rows(rng.dirichlet_ones(n, K))
    labels = np.asarray(init).ravel()
    if labels.size != n:
        raise ValueError(f"{labels.size} initial labels for {n} samples")
    _, codes = np.unique(labels, return_inverse=True)
    if codes.max() >= K:
        raise ValueError(f"initial labels use more than K={K} classes")
    theta = np.zeros((n, K))
    theta[np.arange(n), codes] = 1.0
    return _floor_rows(theta)


def refit_component(samples, weights, resample_factor, rng: RngState, method="pca", index=0) -> ProductEstimate:
    """Fit one component to ``resample_factor * n`` draws each for the
    unmixing and marginal stages, taken from the weighted empirical law."""
    x = np.asarray(samples, dtype=np.float64)
    n, d = x.shape
    draws = 2 * int(resample_factor * n)
    idx = rng.choice_weighted(weights, draws)
    distinct = np.unique(idx).size
    if distinct < d + 2:
        raise ComponentCollapseError(index, distinct, d + 2)
    return fit_lcic(x[idx], ratio=0.5, method=method, rng=rng)


def em_fit(samples, K: int, iters: int = 20, resample_factor: float = DEFAULT_RESAMPLE,
           init="random", rng=None, method: str = "pca") -> MixtureModel:
    """EM for a K-component LC-IC mixture with a fixed iteration count.

    Each iteration refits every component from the current responsibilities,
    sets ``pi_k`` to the mean responsibility and recomputes the posterior.
    The per-iteration log-likelihood is kept in ``loglik_trace``.
    """
    x = np.asarray(samples, dtype=np.float64)
    n, d = x.shape
    if K < 1:
        raise ValueError("K must be >= 1")
    if n < K * (d + 2):
        raise ValueError(f"need n >= K (d + 2) = {K * (d + 2)}, got {n}")
    rng = as_rng(rng)
    theta = _initial_theta(n, K, init, rng.spawn("init"))
    model = None
    trace = []
    for it in range(iters):
        step_rng = rng.spawn("iter", it)
        comps = [refit_component(x, theta[:, k], resample_factor, step_rng.spawn(k), method, k)
                 for k in range(K)]
        pi = theta.mean(axis=0)
        model = MixtureModel(pi / pi.sum(), comps)
        trace.append(model.loglik(x))
        theta = posterior(model, x).theta
    if model is None:
        raise ValueError("iters must be >= 1")
    model.loglik_trace = trace
    return model


def assign_clusters(model: MixtureModel, samples) -> np.ndarray:
    """Most probable component per sample (ties go to the lowest index)."""
    return np.argmax(posterior(model, samples).theta, axis=1)


def clustering_accuracy(labels, truth_labels) -> float:
    """Best agreement over one-to-one relabelings of the predicted clusters."""
    pred = np.asarray(labels).ravel()
    true = np.asarray(truth_labels).ravel()
    if pred.size != true.size:
        raise ValueError("label vectors differ in length")
    if pred.size == 0:
        return 1.0
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(true, return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1))
    np.add.at(table, (p, t), 1.0)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / pred.size)
