"""Divergences between densities and the rotation-stability bounds.

Densities are passed around as pairs of callables: a log-density evaluator
taking an ``(n, d)`` array and a sampler ``sampler(n, rng) -> (n, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngState, as_rng
from .simulate import haar_orthogonal

DEFAULT_K = 10_000
DEFAULT_REPEATS = 50


class InconsistentSamplerError(ValueError):
    """The sampler produced a point where its own density is zero."""


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    K: int
    repeats: int

    @property
    def spread_ok(self) -> bool:
        """Repeat spread small: SE <= max(10% of value, 0.002)."""
        return self.std_error <= max(0.1 * abs(self.value), 0.002)

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "K": self.K, "repeats": self.repeats}


@dataclass(frozen=True)
class KlBoundParams:
    holder_const: float
    alpha: float
    d: int
    sigma_op: float
    rot_dev: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if min(self.holder_const, self.d, self.sigma_op, self.rot_dev) < 0:
            raise ValueError("bound parameters must be nonnegative")


@dataclass(frozen=True)
class TvBoundParams:
    grad_l1: float
    B: float
    d: int
    sigma_op: float
    map_dev: float

    def __post_init__(self):
        if min(self.grad_l1, self.B, self.d, self.sigma_op, self.map_dev) < 0:
            raise ValueError("bound parameters must be nonnegative")


def _as_2d(points):
    pts = np.asarray(points, dtype=np.float64)
    return pts[:, None] if pts.ndim == 1 else pts


def _mc(term_fn, log_p, log_q, p_sampler, K, repeats, rng):
    if K < 100:
        raise ValueError("K must be >= 100")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = as_rng(rng)
    means = np.empty(repeats)
    for r in range(repeats):
        s = _as_2d(p_sampler(K, rng))
        lp = np.asarray(log_p(s), dtype=np.float64)
        lq = np.asarray(log_q(s), dtype=np.float64)
        if np.any(np.isneginf(lp)) or np.any(np.isnan(lp)):
            raise InconsistentSamplerError("log p is -inf at a point drawn from p")
        means[r] = float(np.mean(term_fn(lq - lp)))
    se = float(np.std(means, ddof=1) / np.sqrt(repeats)) if repeats > 1 else 0.0
    return McEstimate(float(np.mean(means)), se, int(K), int(repeats))


def _hellinger_term(log_ratio):
    # 1 - sqrt(q/p): mean is 1 - int sqrt(pq) exactly, with finite variance
    return -np.expm1(0.5 * log_ratio)


def _hellinger_term_literal(log_ratio):
    # (sqrt(q/p) - 1)^2 / 2; log q = -inf gives exactly 1/2.  Its extra
    # (q/p - 1)/2 part has mean zero but infinite variance when q has
    # heavier tails than p.
    return 0.5 * np.expm1(0.5 * log_ratio) ** 2


HELLINGER_FORMS = {"affinity": _hellinger_term, "literal": _hellinger_term_literal}


def _tv_term(log_ratio):
    # (1 - q/p)_+ integrates to TV under p for normalised densities
    return np.maximum(-np.expm1(log_ratio), 0.0)


def hellinger_sq_mc(log_p, log_q, p_sampler, K=DEFAULT_K, repeats=DEFAULT_REPEATS, rng=None,
                    form="affinity") -> McEstimate:
    """Monte Carlo squared Hellinger distance ``1 - int sqrt(p q)``.

    Parameters
    ----------
    log_p, log_q : callable
        Log-density evaluators on ``(K, d)`` arrays.
    p_sampler : callable
        ``p_sampler(K, rng)`` draws from ``p``.
    K, repeats : int
        Samples per repeat and number of repeats; ``std_error`` is the
        standard deviation of the repeat means over ``sqrt(repeats)``.
    form : {"affinity", "literal"}
        ``affinity`` averages ``1 - sqrt(q/p)``.  ``literal`` averages
        ``(sqrt(q/p) - 1)^2 / 2``, which has the same mean when ``q`` puts
        all its mass inside the support of ``p`` but can have infinite
        variance.
    """
    if form not in HELLINGER_FORMS:
        raise ValueError(f"form must be one of {sorted(HELLINGER_FORMS)}")
    return _mc(HELLINGER_FORMS[form], log_p, log_q, p_sampler, K, repeats, rng)


def tv_mc(log_p, log_q, p_sampler, K=DEFAULT_K, repeats=DEFAULT_REPEATS, rng=None) -> McEstimate:
    """Monte Carlo total variation ``E_p[(1 - q/p)_+]``."""
    return _mc(_tv_term, log_p, log_q, p_sampler, K, repeats, rng)


def gaussian_hellinger_sq(mean1, cov1, mean2, cov2) -> float:
    """Closed-form squared Hellinger distance between two Gaussians."""
    m1 = np.atleast_1d(np.asarray(mean1, dtype=np.float64))
    m2 = np.atleast_1d(np.asarray(mean2, dtype=np.float64))
    c1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    c2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    avg = 0.5 * (c1 + c2)
    s1, ld1 = np.linalg.slogdet(c1)
    s2, ld2 = np.linalg.slogdet(c2)
    sa, lda = np.linalg.slogdet(avg)
    if min(s1, s2, sa) <= 0:
        raise np.linalg.LinAlgError("covariances must be positive definite")
    dm = m1 - m2
    quad = float(dm @ np.linalg.solve(avg, dm))
    log_bc = 0.25 * ld1 + 0.25 * ld2 - 0.5 * lda - 0.125 * quad
    return float(-np.expm1(log_bc))


def tensorized_hellinger(h1_sq):
    """Squared Hellinger of a product from its 1-D factors.

    Returns ``(1 - prod(1 - h_i^2), d * max h_i^2)``; the second entry is the
    simple upper bound on the first.
    """
    h = np.asarray(h1_sq, dtype=np.float64)
    if np.any(h < 0) or np.any(h > 1):
        raise ValueError("entries must lie in [0, 1]")
    if h.size == 0:
        return 0.0, 0.0
    value = float(-np.expm1(np.sum(np.log1p(-h)))) if np.all(h < 1) else 1.0
    return value, float(h.size * h.max())


def gaussian_rotation_kl(cov, R) -> float:
    """``KL(N(0, S) || N(0, R^T S R))`` for orthogonal ``R``."""
    s = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    r = np.atleast_2d(np.asarray(R, dtype=np.float64))
    sinv = np.linalg.inv(s)
    return float(0.5 * (np.trace(r.T @ sinv @ r @ s) - s.shape[0]))


def kl_stability_bound(params: KlBoundParams) -> float:
    """``[grad phi]_a d^((1+a)/2) |S|^((1+a)/2) |I-R|^(1+a)``."""
    a = params.alpha
    return float(params.holder_const * params.d ** ((1 + a) / 2)
                 * params.sigma_op ** ((1 + a) / 2) * params.rot_dev ** (1 + a))


def tv_stability_bound(params: TvBoundParams) -> float:
    """``1/2 [(1+B) |grad p|_1 sqrt(d) + d] |S|^(1/4) |I-A|^(1/2)``."""
    return float(0.5 * ((1 + params.B) * params.grad_l1 * np.sqrt(params.d) + params.d)
                 * params.sigma_op**0.25 * params.map_dev**0.5)


# -- helpers shared by tests, the CLI and the stability experiment ----------

def gaussian_logpdf(mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    chol = np.linalg.cholesky(cov)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = mean.size

    def log_p(x):
        diff = _as_2d(x) - mean
        sol = np.linalg.solve(chol, diff.T)
        return -0.5 * (d * np.log(2 * np.pi) + logdet + np.sum(sol * sol, axis=0))

    return log_p


def gaussian_sampler(mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    chol = np.linalg.cholesky(np.atleast_2d(np.asarray(cov, dtype=np.float64)))

    def sample(n, rng):
        z = as_rng(rng).normal(n * mean.size).reshape(n, mean.size)
        return z @ chol.T + mean

    return sample


def plane_rotation(d: int, angle: float, rng: RngState) -> np.ndarray:
    """Rotation by ``angle`` in a random 2-plane of R^d."""
    g = rng.normal(2 * d).reshape(d, 2)
    q, _ = np.linalg.qr(g)
    u, v = q[:, 0], q[:, 1]
    c, s = np.cos(angle), np.sin(angle)
    return (np.eye(d) + (c - 1.0) * (np.outer(u, u) + np.outer(v, v))
            + s * (np.outer(v, u) - np.outer(u, v)))


def _random_cov(d, rng, max_cond=10.0):
    lam = 1.0 + (max_cond - 1.0) * rng.uniform(d)
    scale = 0.5 + 4.5 * rng.uniform(1)[0]
    q = haar_orthogonal(d, rng)
    return q.T @ np.diag(scale * lam) @ q


def kl_domination_suite(n_instances=100, rng=None, dims=(2, 3, 4, 5), max_angle=0.3):
    """Compare the KL stability bound with the exact Gaussian KL.

    Returns a list of dicts with ``kl``, ``bound`` and ``violated``.
    """
    rng = as_rng(rng)
    out = []
    for k in range(n_instances):
        d = int(dims[k % len(dims)])
        cov = _random_cov(d, rng)
        angle = max_angle * rng.uniform(1)[0]
        r = plane_rotation(d, angle, rng)
        lam = np.linalg.eigvalsh(cov)
        kl = gaussian_rotation_kl(cov, r)
        bound = kl_stability_bound(KlBoundParams(1.0 / lam[0], 1.0, d, lam[-1],
                                                 np.linalg.norm(np.eye(d) - r, 2)))
        out.append({"d": d, "angle": angle, "kl": kl, "bound": bound, "violated": kl > bound})
    return out


def tv_domination_suite(n_instances=50, rng=None, dims=(2, 3, 4), max_angle=0.3, K=DEFAULT_K, repeats=10):
    """Compare the TV stability bound with a Monte Carlo TV (4 SE slack)."""
    rng = as_rng(rng)
    out = []
    for k in range(n_instances):
        d = int(dims[k % len(dims)])
        cov = _random_cov(d, rng)
        angle = max_angle * rng.uniform(1)[0]
        r = plane_rotation(d, angle, rng)
        lam = np.linalg.eigvalsh(cov)
        pushed = r @ cov @ r.T
        est = tv_mc(gaussian_logpdf(np.zeros(d), cov), gaussian_logpdf(np.zeros(d), pushed),
                    gaussian_sampler(np.zeros(d), cov), K, repeats, rng)
        bound = tv_stability_bound(TvBoundParams(np.sqrt(d / lam[0]), 1.0, d, lam[-1],
                                                 np.linalg.norm(np.eye(d) - r, 2)))
        out.append({"d": d, "angle": angle, "tv": est.value, "std_error": est.std_error,
                    "bound": bound, "violated": est.value - 4 * est.std_error > bound})
    return out
