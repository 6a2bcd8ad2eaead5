"""Unmixing-matrix estimation: PCA, a basic Fourier-PCA and frame alignment."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .rng import RngState, as_rng

log = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
EIGENGAP_WARN = 1e-3


class ConvergenceError(RuntimeError):
    pass


class DegenerateSpectrumWarning(UserWarning):
    pass


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # rows pair with eigenvalues
    sweeps: int = 0

    @property
    def eigengap(self) -> float:
        if self.eigenvalues.size < 2:
            return np.inf
        return float(np.min(-np.diff(self.eigenvalues)))

    @property
    def degenerate(self) -> bool:
        lam_max = max(abs(self.eigenvalues[0]), np.finfo(float).tiny)
        return self.eigengap < EIGENGAP_WARN * lam_max


@dataclass
class FourierPcaConfig:
    """Probe settings for :func:`fourier_pca_unmixing`.

    ``delta``, ``k``, ``mu4`` and ``muk`` are the moment constants of the
    non-Gaussianity assumption; they are logged but do not change the result.
    """

    probe_scale: float = 1.0
    n_probes: int = 8
    delta: float | None = None
    k: int | None = None
    mu4: float | None = None
    muk: float | None = None

    def __post_init__(self):
        if not self.probe_scale > 0:
            raise ValueError("probe_scale must be > 0")
        if self.n_probes < 1:
            raise ValueError("n_probes must be >= 1")


@dataclass
class FrameAlignment:
    permutation: np.ndarray  # estimate row i matches truth row permutation[i]
    signs: np.ndarray
    errors: np.ndarray = field(repr=False)

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if self.errors.size else 0.0


def center(samples):
    """Return ``(mean, centered)``."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a non-empty n x d sample matrix")
    mu = x.mean(axis=0)
    return mu, x - mu


def empirical_covariance(centered) -> np.ndarray:
    """``(1/M) sum_j y_j y_j^T`` (divisor M, no mean correction)."""
    y = np.asarray(centered, dtype=np.float64)
    cov = y.T @ y / y.shape[0]
    return 0.5 * (cov + cov.T)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vecs * signs[:, None]


def symmetric_eigen(a) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order (stable with respect to the
    original diagonal order) and each eigenvector is sign-fixed so that its
    largest-magnitude entry is positive.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    vals, vecs, sweeps = kernels.jacobi_eigh(np.ascontiguousarray(a), JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(-vals, kind="stable")
    return EigenDecomposition(vals[order], _fix_signs(vecs[:, order].T), sweeps)


def pca_unmixing(samples):
    """Frame of covariance eigenvectors, eigenvalue-descending.

    Returns ``(frame, eig)``.  Warns with :class:`DegenerateSpectrumWarning`
    when the eigengap is too small for the frame to be meaningful.
    """
    y = np.asarray(samples, dtype=np.float64)
    n, d = y.shape
    if n < d:
        raise ValueError(f"need at least d={d} samples for PCA, got {n}")
    eig = symmetric_eigen(empirical_covariance(y))
    if eig.degenerate:
        warnings.warn(
            f"eigengap {eig.eigengap:.3g} is tiny relative to the top eigenvalue; "
            "consider method='fourier'",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return eig.eigenvectors, eig


def _reweighted_hessian(y, u):
    """Empirical Hessian of the log characteristic function at ``u``.

    Returns ``(D, |phi(u)|)``; ``D`` is complex symmetric.
    """
    ph = np.exp(1j * (y @ u))
    norm = ph.sum()
    mean_w = (y * ph[:, None]).sum(axis=0) / norm
    second = (y.T * ph) @ y / norm
    return -(second - np.outer(mean_w, mean_w)), abs(norm) / y.shape[0]


def fourier_pca_unmixing(samples, cfg: FourierPcaConfig | None = None, rng: RngState | None = None):
    """Unmixing frame from a reweighted covariance (Fourier PCA).

    For each probe ``u`` the Hessian ``D`` of the empirical log characteristic
    function equals ``W^T C W`` with ``C`` diagonal, so any real combination
    ``a Re(D) + b Im(D)`` shares the eigenvectors ``w_i``.  Several probes are
    drawn; each gives a candidate frame, and the candidate that best
    diagonalises all probe matrices at once is returned.
    Gaussian data gives a degenerate ``C`` and no usable frame.
    """
    cfg = cfg or FourierPcaConfig()
    rng = as_rng(rng)
    y = np.asarray(samples, dtype=np.float64)
    n, d = y.shape
    if n < d:
        raise ValueError(f"need at least d={d} samples, got {n}")
    if d == 1:
        return np.ones((1, 1))
    if any(v is not None for v in (cfg.delta, cfg.k, cfg.mu4, cfg.muk)):
        log.info("fourier pca moment constants delta=%s k=%s mu4=%s muk=%s (recorded only)",
                 cfg.delta, cfg.k, cfg.mu4, cfg.muk)
    lam_max = max(symmetric_eigen(empirical_covariance(y)).eigenvalues[0], np.finfo(float).tiny)
    radius = cfg.probe_scale / np.sqrt(lam_max)
    mats = []
    failures = 0
    while len(mats) < cfg.n_probes:
        direction = rng.normal(d)
        u = radius * direction / np.linalg.norm(direction)
        dmat, charf = _reweighted_hessian(y, u)
        if charf < 1e-3:
            failures += 1
            if failures > 16:
                raise ConvergenceError("characteristic function too close to zero for every probe")
            continue
        a, b = rng.normal(2)
        mats.append(a * dmat.real + b * dmat.imag)
    candidates = [symmetric_eigen(m).eigenvectors for m in mats]
    if len(candidates) == 1:
        return candidates[0]
    # every probe matrix shares the true eigenvectors: keep the candidate
    # that leaves the least off-diagonal energy across all of them
    scores = [_off_energy(f, mats) for f in candidates]
    return candidates[int(np.argmin(scores))]


def _off_energy(frame, mats):
    total = 0.0
    for m in mats:
        rot = frame @ m @ frame.T
        off = rot - np.diag(np.diag(rot))
        total += np.sum(off * off) / max(np.sum(m * m), np.finfo(float).tiny)
    return total


def align_frames(estimate, truth) -> FrameAlignment:
    """Match estimated rows to true rows up to permutation and sign.

    Uses an optimal assignment on the cost ``1 - |w_hat_i . w_j|`` and then
    the better sign per matched pair.
    """
    est = np.atleast_2d(np.asarray(estimate, dtype=np.float64))
    tru = np.atleast_2d(np.asarray(truth, dtype=np.float64))
    if est.shape != tru.shape:
        raise ValueError(f"dimension mismatch {est.shape} vs {tru.shape}")
    dots = est @ tru.T
    rows, cols = linear_sum_assignment(1.0 - np.abs(dots))
    perm = np.empty(est.shape[0], dtype=np.int64)
    perm[rows] = cols
    signs = np.sign(dots[np.arange(est.shape[0]), perm])
    signs[signs == 0] = 1.0
    errors = np.linalg.norm(est - signs[:, None] * tru[perm], axis=1)
    return FrameAlignment(perm, signs, errors)
