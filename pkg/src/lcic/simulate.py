"""Ground-truth models: orthogonally mixed products of log-concave marginals."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .rng import RngState, as_rng


def haar_orthogonal(d: int, rng: RngState) -> np.ndarray:
    """Haar-distributed orthogonal ``d x d`` matrix (QR of a Gaussian matrix,
    columns sign-fixed so that ``diag(R) > 0``)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = as_rng(rng)
    g = rng.normal(d * d).reshape(d, d)
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen=True)
class MarginalSpec:
    """One independent component.

    ``family`` is ``"normal"`` (uses ``variance``) or ``"gamma"`` (uses
    ``shape`` and ``scale``).  A centred gamma is shifted by its mean
    ``shape * scale``.
    """

    family: str
    variance: float = 1.0
    shape: float = 1.0
    scale: float = 1.0
    centered: bool = False

    def __post_init__(self):
        if self.family == "normal":
            if not self.variance > 0:
                raise ValueError("normal variance must be > 0")
        elif self.family == "gamma":
            if not self.scale > 0:
                raise ValueError("gamma scale must be > 0")
            if not self.shape >= 1:
                raise ValueError("gamma shape must be >= 1 (log-concavity)")
        else:
            raise ValueError(f"unknown family {self.family!r}")

    @classmethod
    def normal(cls, variance=1.0):
        return cls("normal", variance=float(variance))

    @classmethod
    def gamma(cls, shape, scale=1.0, centered=False):
        return cls("gamma", shape=float(shape), scale=float(scale), centered=bool(centered))

    @property
    def shift(self) -> float:
        if self.family == "gamma" and self.centered:
            return self.shape * self.scale
        return 0.0

    @property
    def mean(self) -> float:
        if self.family == "normal":
            return 0.0
        return self.shape * self.scale - self.shift

    @property
    def var(self) -> float:
        if self.family == "normal":
            return self.variance
        return self.shape * self.scale**2

    def logpdf(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.family == "normal":
            return -0.5 * np.log(2 * np.pi * self.variance) - 0.5 * z * z / self.variance
        t = (z + self.shift) / self.scale
        inside = t >= 0 if self.shape == 1.0 else t > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = ((self.shape - 1.0) * np.log(np.where(inside, t, 1.0)) - t
                   - special.gammaln(self.shape) - np.log(self.scale))
        return np.where(inside, val, -np.inf)

    def cdf(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.family == "normal":
            return stats.norm.cdf(z, scale=np.sqrt(self.variance))
        return stats.gamma.cdf(z + self.shift, self.shape, scale=self.scale)

    def sample(self, n: int, rng: RngState) -> np.ndarray:
        if self.family == "normal":
            return np.sqrt(self.variance) * rng.normal(n)
        return self.scale * rng.gamma(self.shape, n) - self.shift


@dataclass
class GroundTruthModel:
    """Density ``p(x) = prod_i f_i(w_i . (x - mean))`` with orthogonal ``frame``."""

    frame: np.ndarray
    marginals: list
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        self.frame = np.atleast_2d(np.asarray(self.frame, dtype=np.float64))
        d = self.frame.shape[0]
        if self.frame.shape != (d, d) or len(self.marginals) != d:
            raise ValueError("frame must be d x d with d marginals")
        if not np.allclose(self.frame @ self.frame.T, np.eye(d), atol=1e-10):
            raise ValueError("frame rows must be orthonormal")
        self.mean = np.zeros(d) if self.mean is None else np.asarray(self.mean, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        v = np.array([m.var for m in self.marginals])
        return self.frame.T @ np.diag(v) @ self.frame

    def sample(self, n: int, rng: RngState) -> np.ndarray:
        return sample_ground_truth(self, n, rng)

    def logpdf(self, x) -> np.ndarray:
        return eval_ground_truth_logdensity(self, x)


def gaussian_model(variances, rng=None, frame=None, mean=None) -> GroundTruthModel:
    """Gaussian product model; a Haar frame is drawn from ``rng`` unless given."""
    variances = list(variances)
    if frame is None:
        frame = haar_orthogonal(len(variances), as_rng(rng))
    return GroundTruthModel(frame, [MarginalSpec.normal(v) for v in variances], mean)


def gamma_model(shapes, scale=1.0, frame=None, mean=None, centered=False) -> GroundTruthModel:
    shapes = list(shapes)
    if frame is None:
        frame = np.eye(len(shapes))
    return GroundTruthModel(frame, [MarginalSpec.gamma(k, scale, centered) for k in shapes], mean)


def sample_ground_truth(model: GroundTruthModel, n: int, rng: RngState) -> np.ndarray:
    """Draw ``n`` rows: ``z`` from the marginals, then ``x = W^T z + mean``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_rng(rng)
    z = np.column_stack([m.sample(n, rng) for m in model.marginals])
    return z @ model.frame + model.mean


def eval_ground_truth_logdensity(model: GroundTruthModel, x) -> np.ndarray:
    """Log-density at ``x`` (a d-vector or an n x d array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z = (np.atleast_2d(x) - model.mean) @ model.frame.T
    out = np.zeros(z.shape[0])
    for i, m in enumerate(model.marginals):
        out = out + m.logpdf(z[:, i])
    return float(out[0]) if single else out
