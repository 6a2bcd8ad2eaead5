"""Loop-based kernels compiled with numba; mirrors ``_numpy.py``."""
import math

import numpy as np
from numba import njit

_SERIES_CUT = 0.5
_SERIES_TERMS = 20


@njit(cache=True)
def _jfun(u, k):
    if abs(u) < _SERIES_CUT:
        acc = 0.0
        term = 1.0
        for n in range(_SERIES_TERMS):
            acc += term / (n + k + 1)
            term = term * u / (n + 1)
        return acc
    e = math.exp(u)
    if k == 0:
        return math.expm1(u) / u
    if k == 1:
        return (e * (u - 1.0) + 1.0) / (u * u)
    return (e * (u * u - 2.0 * u + 2.0) - 2.0) / (u * u * u)


@njit(cache=True)
def _moments(r, s):
    delta = s - r
    u = -abs(delta)
    a0 = _jfun(u, 0)
    a1 = _jfun(u, 1)
    a2 = _jfun(u, 2)
    base = math.exp(max(r, s))
    if delta > 0:
        return base * a0, base * (a0 - a1), base * (a0 - 2.0 * a1 + a2)
    return base * a0, base * a1, base * a2


@njit(cache=True)
def segment_moments(r, s):
    n = r.size
    t0 = np.empty(n)
    t1 = np.empty(n)
    t2 = np.empty(n)
    for i in range(n):
        t0[i], t1[i], t2[i] = _moments(r[i], s[i])
    return t0, t1, t2


@njit(cache=True)
def segment_mass(x, phi):
    n = x.size - 1
    mass = np.empty(n)
    mom = np.empty(n)
    for a in range(n):
        h = x[a + 1] - x[a]
        t0, t1, _ = _moments(phi[a], phi[a + 1])
        mass[a] = h * t0
        mom[a] = h * h * t1
    return mass, mom


@njit(cache=True)
def kink_gradient(x, w, phi):
    m = x.size
    mass, mom = segment_mass(x, phi)
    out = np.zeros(m)
    sw = 0.0
    swx = 0.0
    sa = 0.0
    sb = 0.0
    for i in range(m - 1, -1, -1):
        if i < m - 1:
            sa += mom[i] + x[i] * mass[i]
            sb += mass[i]
        out[i] = -(swx - x[i] * sw) + (sa - x[i] * sb)
        sw += w[i]
        swx += w[i] * x[i]
    return out


@njit(cache=True)
def knot_newton_terms(y, eta):
    p = eta.size
    grad = np.zeros(p)
    diag = np.zeros(p)
    off = np.zeros(p - 1)
    integral = 0.0
    for s in range(p - 1):
        h = y[s + 1] - y[s]
        t0, t1, t2 = _moments(eta[s], eta[s + 1])
        integral += h * t0
        grad[s] += h * (t0 - t1)
        grad[s + 1] += h * t1
        diag[s] += h * (t0 - 2.0 * t1 + t2)
        diag[s + 1] += h * t2
        off[s] = h * (t1 - t2)
    return integral, grad, diag, off


@njit(cache=True)
def tridiag_solve(diag, off, rhs):
    n = diag.size
    c = np.zeros(n)
    d = np.zeros(n)
    c_prev = 0.0
    d_prev = 0.0
    for i in range(n):
        lower = off[i - 1] if i > 0 else 0.0
        denom = diag[i] - lower * c_prev
        c[i] = off[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower * d_prev) / denom
        c_prev = c[i]
        d_prev = d[i]
    x = np.zeros(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


@njit(cache=True)
def _offnorm(a):
    n = a.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return math.sqrt(acc)


@njit(cache=True)
def jacobi_eigh(a_in, tol, max_sweeps):
    a = a_in.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = math.sqrt(np.sum(a * a))
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v, 0
    thresh = tol * scale
    for sweep in range(max_sweeps):
        if _offnorm(a) <= thresh:
            return np.diag(a).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    if _offnorm(a) <= thresh:
        return np.diag(a).copy(), v, max_sweeps
    return np.diag(a).copy(), v, -1


@njit(cache=True)
def build_alias(p):
    n = p.size
    scaled = p * n / np.sum(p)
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    # stacks hold indices in descending order so pops yield ascending order
    for i in range(n - 1, -1, -1):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    for k in range(nl):
        prob[large[k]] = 1.0
        alias[large[k]] = large[k]
    for k in range(ns):
        prob[small[k]] = 1.0
        alias[small[k]] = small[k]
    return prob, alias
