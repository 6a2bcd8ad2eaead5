"""Univariate log-concave maximum likelihood estimation.

The estimate maximises

    L(phi) = sum_j w_j phi(x_j) - int exp(phi(z)) dz

over concave ``phi`` that are piecewise linear between the sorted data points
and ``-inf`` outside ``[x_min, x_max]``.  Any maximiser integrates to one.

The solver is an active-set method.  For a set ``K`` of knot indices, ``V(K)``
is the space of functions linear between consecutive knots; ``L`` restricted
to ``V(K)`` is smooth and strictly concave with a tridiagonal Hessian, so it is
maximised by damped Newton steps.  Outside that, the directional derivative
of ``L`` along ``-(z - x_i)_+`` tells whether a new kink at ``x_i`` would help.
Adding the best such kink and re-optimising can produce a non-concave
candidate; in that case the iterate moves along the segment towards the
candidate until a kink vanishes, drops that knot and re-optimises.  Every
accepted iterate increases ``L``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import RngState, as_rng

MAX_OUTER = 500
ADD_TOL = 1e-8
NEWTON_TOL = 1e-11
NEWTON_MAX = 100


class FitError(RuntimeError):
    """Raised when the active-set solver fails to converge."""


@dataclass(frozen=True)
class WeightedPoints:
    """Distinct sorted values with positive weights summing to one."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if v.ndim != 1 or v.shape != w.shape:
            raise ValueError("values and weights must be 1-D of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite values or weights")
        if v.size < 2:
            raise ValueError("log-concave MLE needs at least 2 distinct points")
        if np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_samples(cls, samples, weights=None) -> "WeightedPoints":
        """Collapse duplicated sample values into weights."""
        x = np.asarray(samples, dtype=np.float64).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite sample values")
        w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != x.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite, nonnegative and match samples")
        keep = w > 0
        uniq, inv = np.unique(x[keep], return_inverse=True)
        agg = np.bincount(inv, weights=w[keep], minlength=uniq.size)
        return cls(uniq, agg / agg.sum())


@dataclass
class LogConcave1D:
    """Piecewise-linear concave log-density on ``[knots[0], knots[-1]]``."""

    knots: np.ndarray
    phi: np.ndarray
    n_iter: int = field(default=0, compare=False)
    trace: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=np.float64)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.knots.ndim != 1 or self.knots.shape != self.phi.shape or self.knots.size < 2:
            raise ValueError("need matching 1-D knots and phi with at least 2 entries")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.phi) / np.diff(self.knots)

    def segment_masses(self) -> np.ndarray:
        mass, _ = kernels.segment_mass(self.knots, self.phi)
        return mass

    def integral(self) -> float:
        return float(np.sum(self.segment_masses()))

    def is_concave(self, tol=1e-9) -> bool:
        s = self.slopes
        return bool(np.all(np.diff(s) <= tol * (1.0 + np.abs(s[:-1]))))

    def log_density(self, z):
        return log_density_1d(self, z)

    def pdf(self, z):
        return np.exp(log_density_1d(self, z))

    def cdf(self, z):
        return cdf_1d(self, z)

    def sample(self, n: int, rng: RngState):
        return sample_1d(self, n, rng)

    def mean(self) -> float:
        mass, mom = kernels.segment_mass(self.knots, self.phi)
        return float(np.sum(mom + self.knots[:-1] * mass) / np.sum(mass))

    def loglik(self, data: WeightedPoints) -> float:
        return float(np.dot(data.weights, log_density_1d(self, data.values)))


class _Solver:
    """Active-set state in standardised coordinates ``y`` in ``[0, 1]``."""

    def __init__(self, y, w):
        self.y = y
        self.w = w
        self.m = y.size

    def coefficients(self, knots):
        """Weights of the data distributed onto the knot hat functions."""
        p = knots.size
        seg = np.searchsorted(knots, np.arange(self.m), side="right") - 1
        seg = np.clip(seg, 0, p - 2)
        left = self.y[knots[seg]]
        right = self.y[knots[seg + 1]]
        lam = (self.y - left) / (right - left)
        return (np.bincount(seg, weights=self.w * (1.0 - lam), minlength=p)
                + np.bincount(seg + 1, weights=self.w * lam, minlength=p))

    def objective(self, yk, c, eta):
        integral, _, _, _ = kernels.knot_newton_terms(yk, eta)
        return float(np.dot(c, eta) - integral)

    def newton(self, knots, eta):
        """Maximise L over V(knots) starting from ``eta``."""
        yk = np.ascontiguousarray(self.y[knots])
        c = self.coefficients(knots)
        eta = eta.copy()
        value = self.objective(yk, c, eta)
        for _ in range(NEWTON_MAX):
            integral, gint, diag, off = kernels.knot_newton_terms(yk, eta)
            grad = c - gint
            if np.max(np.abs(grad)) < NEWTON_TOL:
                break
            step = kernels.tridiag_solve(diag, off, grad)
            slope = float(np.dot(grad, step))
            if not slope > 0:  # numerically not an ascent direction
                step = grad
                slope = float(np.dot(grad, grad))
            t = 1.0
            for _ in range(60):
                trial = eta + t * step
                new_value = self.objective(yk, c, trial)
                if new_value >= value + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                break  # no further progress at machine precision
            eta = trial
            value = new_value
        return eta, value

    @staticmethod
    def kinks(yk, eta):
        slopes = np.diff(eta) / np.diff(yk)
        return slopes[:-1] - slopes[1:]


def fit_logconcave_1d(data) -> LogConcave1D:
    """Log-concave MLE of weighted 1-D data.

    ``data`` is a :class:`WeightedPoints` or a raw sample array (duplicates are
    collapsed into weights).
    """
    if not isinstance(data, WeightedPoints):
        data = WeightedPoints.from_samples(data)
    x0 = data.values[0]
    scale = data.values[-1] - data.values[0]
    y = (data.values - x0) / scale
    y[-1] = 1.0
    solver = _Solver(np.ascontiguousarray(y), np.ascontiguousarray(data.weights))

    knots = np.array([0, solver.m - 1])
    eta, value = solver.newton(knots, np.zeros(2))
    trace = [value]
    n_iter = 0
    for n_iter in range(1, MAX_OUTER + 1):
        phi_all = np.interp(y, y[knots], eta)
        gain = kernels.kink_gradient(solver.y, solver.w, phi_all)
        gain[knots] = -np.inf
        best = int(np.argmax(gain))
        if not gain[best] > ADD_TOL:
            break
        knots = np.insert(knots, np.searchsorted(knots, best), best)
        current = phi_all[knots]
        for _ in range(knots.size + 2):
            cand, cand_value = solver.newton(knots, current)
            yk = y[knots]
            kc = solver.kinks(yk, cand)
            if np.all(kc >= 0):
                break
            kcur = np.maximum(solver.kinks(yk, current), 0.0)
            bad = kc < 0
            ratios = kcur[bad] / (kcur[bad] - kc[bad])
            t = float(np.min(ratios))
            current = current + t * (cand - current)
            knew = solver.kinks(yk, current)
            drop = np.zeros(knots.size, dtype=bool)
            drop[1:-1] = knew <= 1e-14 * (1.0 + np.abs(knew).max())
            drop[1 + np.flatnonzero(bad)[np.argmin(ratios)]] = True
            knots = knots[~drop]
            current = current[~drop]
        else:
            raise FitError("active-set inner loop did not settle")
        if cand_value < trace[-1] - 1e-12 * (1.0 + abs(trace[-1])):
            raise FitError(f"log-likelihood decreased at iteration {n_iter}")
        eta = cand
        trace.append(cand_value)
    else:
        raise FitError(f"no convergence within {MAX_OUTER} active-set iterations")

    kx = data.values[knots]  # exact data values, so the support is [min, max]
    phi = eta - np.log(scale)
    model = LogConcave1D(kx, phi, n_iter=n_iter, trace=tuple(trace))
    model.phi = phi - np.log(model.integral())
    return model


def log_density_1d(model: LogConcave1D, z):
    """Interpolated log-density; ``-inf`` outside the support."""
    z = np.asarray(z, dtype=np.float64)
    val = np.interp(z, model.knots, model.phi)
    out = np.where((z >= model.knots[0]) & (z <= model.knots[-1]), val, -np.inf)
    return float(out) if out.ndim == 0 else out


def _mass_table(model):
    mass = model.segment_masses()
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    return mass, cum


def cdf_1d(model: LogConcave1D, z):
    """Exact distribution function of the piecewise log-linear density."""
    z = np.asarray(z, dtype=np.float64)
    zz = np.clip(np.atleast_1d(z), model.knots[0], model.knots[-1])
    _, cum = _mass_table(model)
    total = cum[-1]
    seg = np.clip(np.searchsorted(model.knots, zz, side="right") - 1, 0, model.knots.size - 2)
    left = model.knots[seg]
    h = zz - left
    val = np.interp(zz, model.knots, model.phi)
    t0, _, _ = kernels.segment_moments(np.ascontiguousarray(model.phi[seg]), np.ascontiguousarray(val))
    out = np.clip((cum[seg] + h * t0) / total, 0.0, 1.0)
    return float(out[0]) if z.ndim == 0 else out


def sample_1d(model: LogConcave1D, n: int, rng: RngState) -> np.ndarray:
    """Inverse-CDF sampling, analytically within each segment."""
    rng = as_rng(rng)
    mass, cum = _mass_table(model)
    target = rng.uniform(n) * cum[-1]
    seg = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, mass.size - 1)
    k, phi = model.knots, model.phi
    h = k[seg + 1] - k[seg]
    a = phi[seg]
    b = phi[seg + 1]
    beta = (b - a) / h
    below = target - cum[seg]
    above = np.maximum(mass[seg] - below, 0.0)
    rising = beta > 0
    # anchor at the denser end of each segment to keep exp() in range
    anchor = np.where(rising, b, a)
    part = np.where(rising, above, below)
    q = part * np.exp(-anchor)
    bq = np.where(rising, -beta, beta) * q
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(np.abs(bq) < 1e-10, q * (1.0 - 0.5 * bq),
                     np.log1p(np.maximum(bq, -1.0 + 1e-16)) / np.where(rising, -beta, beta))
    t = np.clip(t, 0.0, h)
    z = np.where(rising, k[seg + 1] - t, k[seg] + t)
    return np.clip(z, k[0], k[-1])
