"""The log-concave independent components (LC-IC) estimator.

Pipeline: centre the data, split it once into an unmixing half and a
marginal half, estimate the orthogonal unmixing frame on the first half,
project the second half onto the estimated directions, fit a 1-D log-concave
MLE per direction, and assemble the product density around the sample mean.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .logconcave import FitError, LogConcave1D, fit_logconcave_1d, sample_1d
from .rng import RngState, as_rng
from .unmixing import (
    DegenerateSpectrumWarning,
    FourierPcaConfig,
    center,
    empirical_covariance,
    fourier_pca_unmixing,
    symmetric_eigen,
)

DEFAULT_RATIO = 0.5
METHODS = ("pca", "fourier", "auto")


class SplitError(ValueError):
    pass


class MarginalFitError(RuntimeError):
    def __init__(self, direction, cause):
        super().__init__(f"marginal fit failed for direction {direction}: {cause}")
        self.direction = direction


@dataclass(frozen=True)
class SplitPlan:
    """Index sets for the unmixing (``M``) and marginal (``N``) halves."""

    unmixing: np.ndarray
    marginal: np.ndarray

    @classmethod
    def make(cls, n: int, d: int, ratio: float, rng: RngState) -> "SplitPlan":
        if not 0.0 < ratio < 1.0:
            raise SplitError(f"split ratio must lie in (0, 1), got {ratio}")
        m = int(round(ratio * n))
        if m < d or n - m < 2:
            raise SplitError(f"split infeasible: n={n}, d={d}, ratio={ratio} gives M={m}, N={n - m}")
        order = rng.permutation(n)
        return cls(order[:m], order[m:])

    @property
    def M(self) -> int:
        return self.unmixing.size

    @property
    def N(self) -> int:
        return self.marginal.size


@dataclass
class ProductEstimate:
    """``p(x) = prod_i f_i(w_i . (x - mean))`` with fitted log-concave ``f_i``."""

    mean: np.ndarray
    frame: np.ndarray
    marginals: list
    method: str = "pca"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.frame = np.atleast_2d(np.asarray(self.frame, dtype=np.float64))
        d = self.mean.size
        if self.frame.shape != (d, d) or len(self.marginals) != d:
            raise ValueError("mean, frame and marginals disagree on dimension")

    @property
    def dim(self) -> int:
        return self.mean.size

    def project(self, x) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=np.float64)) - self.mean) @ self.frame.T

    def log_density(self, x):
        return log_density(self, x)

    def logpdf(self, x):
        return log_density(self, x)

    def sample(self, n: int, rng: RngState) -> np.ndarray:
        return sample_estimate(self, n, rng)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "W": self.frame.tolist(),
            "marginals": [{"knots": m.knots.tolist(), "phi": m.phi.tolist()} for m in self.marginals],
            "method": self.method,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        # json emits floats with repr(), which round-trips exactly
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ProductEstimate":
        try:
            marginals = [LogConcave1D(m["knots"], m["phi"]) for m in doc["marginals"]]
            return cls(doc["mean"], doc["W"], marginals, doc.get("method", "pca"),
                       dict(doc.get("diagnostics", {})))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ProductEstimate":
        return cls.from_dict(json.loads(text))


def _fit_marginals(z):
    marginals = []
    for i in range(z.shape[1]):
        try:
            marginals.append(fit_logconcave_1d(z[:, i]))
        except (FitError, ValueError) as exc:
            raise MarginalFitError(i, exc) from exc
    return marginals


def fit_lcic(samples, ratio: float = DEFAULT_RATIO, method: str = "auto", rng=None,
             fourier: FourierPcaConfig | None = None) -> ProductEstimate:
    """Fit the LC-IC density estimate.

    Parameters
    ----------
    samples : (n, d) array
    ratio : float
        Fraction ``M / n`` of the (shuffled) samples used for the frame.
    method : {"pca", "fourier", "auto"}
        ``auto`` switches to Fourier PCA when the covariance spectrum of the
        unmixing half is degenerate.
    rng : RngState or int
        Drives the split shuffle and Fourier probes.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite entries")
    rng = as_rng(rng)
    n, d = x.shape
    mu, xc = center(x)
    plan = SplitPlan.make(n, d, ratio, rng)
    y = xc[plan.unmixing]
    eig = symmetric_eigen(empirical_covariance(y))
    used = method
    if method == "auto":
        used = "fourier" if eig.degenerate else "pca"
    if used == "pca":
        if eig.degenerate:
            warnings.warn("degenerate covariance spectrum; PCA frame is arbitrary",
                          DegenerateSpectrumWarning, stacklevel=2)
        frame = eig.eigenvectors
    else:
        frame = fourier_pca_unmixing(y, fourier, rng.spawn("fourier"))
    z = xc[plan.marginal] @ frame.T
    marginals = _fit_marginals(z)
    diagnostics = {
        "eigengap": float(eig.eigengap) if d > 1 else None,
        "eigenvalues": eig.eigenvalues.tolist(),
        "knots": [int(m.knots.size) for m in marginals],
        "M": plan.M,
        "N": plan.N,
    }
    return ProductEstimate(mu, frame, marginals, used, diagnostics)


def fit_oracle(samples, frame, center_data: bool = True) -> ProductEstimate:
    """Product estimate with a known frame: every sample feeds the marginals."""
    x = np.asarray(samples, dtype=np.float64)
    if center_data:
        mu, xc = center(x)
    else:
        mu, xc = np.zeros(x.shape[1]), x
    frame = np.atleast_2d(np.asarray(frame, dtype=np.float64))
    marginals = _fit_marginals(xc @ frame.T)
    return ProductEstimate(mu, frame, marginals, "oracle",
                           {"knots": [int(m.knots.size) for m in marginals]})


def log_density(estimate: ProductEstimate, x):
    """Sum of marginal log-densities of the projections; ``-inf`` off-support."""
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    z = estimate.project(xa)
    out = np.zeros(z.shape[0])
    for i, m in enumerate(estimate.marginals):
        out = out + m.log_density(z[:, i])
    return float(out[0]) if single else out


def sample_estimate(estimate: ProductEstimate, n: int, rng) -> np.ndarray:
    """Draw ``z_i`` from each marginal and map back: ``x = W^T z + mean``."""
    rng = as_rng(rng)
    z = np.column_stack([sample_1d(m, n, rng) for m in estimate.marginals])
    return z @ estimate.frame + estimate.mean
