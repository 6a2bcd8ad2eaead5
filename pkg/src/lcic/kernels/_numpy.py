"""Vectorised numpy implementations of the hot kernels.

Every function here has a loop-based twin in ``_numba.py`` with the same
signature; results agree to rounding.
"""
import numpy as np
from scipy.linalg import solveh_banded

_SERIES_CUT = 0.5
_SERIES_TERMS = 20


def _jfun(u, k):
    """int_0^1 t^k exp(t u) dt for u <= 0, k in {0, 1, 2}."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    small = np.abs(u) < _SERIES_CUT
    if np.any(small):
        us = u[small]
        acc = np.zeros_like(us)
        term = np.ones_like(us)
        for n in range(_SERIES_TERMS):
            acc += term / (n + k + 1)
            term = term * us / (n + 1)
        out[small] = acc
    big = ~small
    if np.any(big):
        ub = u[big]
        e = np.exp(ub)
        if k == 0:
            out[big] = np.expm1(ub) / ub
        elif k == 1:
            out[big] = (e * (ub - 1.0) + 1.0) / ub**2
        else:
            out[big] = (e * (ub * ub - 2.0 * ub + 2.0) - 2.0) / ub**3
    return out


def segment_moments(r, s):
    """Moments of exp(linear) on [0, 1] with end values ``r`` and ``s``.

    Returns ``(T0, T1, T2)`` with ``Tk = int_0^1 t^k exp((1-t) r + t s) dt``,
    evaluated without overflow by factoring out ``exp(max(r, s))``.
    """
    r = np.asarray(r, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    delta = s - r
    u = -np.abs(delta)
    a0, a1, a2 = _jfun(u, 0), _jfun(u, 1), _jfun(u, 2)
    base = np.exp(np.maximum(r, s))
    rising = delta > 0
    t1 = np.where(rising, a0 - a1, a1)
    t2 = np.where(rising, a0 - 2.0 * a1 + a2, a2)
    return base * a0, base * t1, base * t2


def segment_mass(x, phi):
    """Mass and first moment (about each left end) of every data segment."""
    h = np.diff(x)
    t0, t1, _ = segment_moments(phi[:-1], phi[1:])
    return h * t0, h * h * t1


def kink_gradient(x, w, phi):
    """Directional derivative of the log-likelihood along ``-(z - x_i)_+``.

    ``x`` sorted, ``w`` weights, ``phi`` concave values at ``x``.  Entry ``i``
    is the first-order gain from inserting a concave kink at ``x[i]``.
    """
    mass, mom = segment_mass(x, phi)
    m = x.size
    # suffix sums over data points j > i
    sw = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    swx = np.concatenate([np.cumsum((w * x)[::-1])[::-1][1:], [0.0]])
    # suffix sums over segments a >= i
    seg_a = mom + x[:-1] * mass
    sa = np.zeros(m)
    sb = np.zeros(m)
    sa[:-1] = np.cumsum(seg_a[::-1])[::-1]
    sb[:-1] = np.cumsum(mass[::-1])[::-1]
    return -(swx - x * sw) + (sa - x * sb)


def knot_newton_terms(y, eta):
    """Integral of exp(interpolant) over knot segments, its gradient and
    tridiagonal Hessian (diagonal, off-diagonal) in the knot values."""
    h = np.diff(y)
    t0, t1, t2 = segment_moments(eta[:-1], eta[1:])
    integral = float(np.sum(h * t0))
    grad = np.zeros(eta.size)
    grad[:-1] += h * (t0 - t1)
    grad[1:] += h * t1
    diag = np.zeros(eta.size)
    diag[:-1] += h * (t0 - 2.0 * t1 + t2)
    diag[1:] += h * t2
    off = h * (t1 - t2)
    return integral, grad, diag, off


def tridiag_solve(diag, off, rhs):
    """Solve a symmetric positive-definite tridiagonal system."""
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    return solveh_banded(ab, rhs)


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi eigendecomposition.

    Returns ``(eigenvalues, V, sweeps)`` with eigenvectors in the columns of
    ``V`` (unsorted).  ``sweeps == -1`` signals non-convergence.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v, 0
    thresh = tol * scale
    mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps):
        if np.sqrt(np.sum(a[mask] ** 2)) <= thresh:
            return np.diag(a).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if np.sqrt(np.sum(a[mask] ** 2)) <= thresh:
        return np.diag(a).copy(), v, max_sweeps
    return np.diag(a).copy(), v, -1


def build_alias(p):
    """Vose alias table for a probability vector ``p``."""
    n = p.size
    scaled = p * n / np.sum(p)
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    small.reverse()
    large.reverse()
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    for g in large:
        prob[g] = 1.0
        alias[g] = g
    for s in small:
        prob[s] = 1.0
        alias[s] = s
    return prob, alias
