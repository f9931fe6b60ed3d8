"""numba-compiled kernels; same contracts as ``_numpy``."""

import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def binom_logpmf(n, r):
    out = np.empty(n + 1)
    lgn = math.lgamma(n + 1.0)
    lr = 0.0
    l1r = 0.0
    if 0.0 < r < 1.0:
        lr = math.log(r)
        l1r = math.log1p(-r)
    for k in range(n + 1):
        c = lgn - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)
        if r <= 0.0:
            out[k] = c if k == 0 else -np.inf
        elif r >= 1.0:
            out[k] = c if k == n else -np.inf
        else:
            out[k] = c + k * lr + (n - k) * l1r
    return out


@njit(**_OPTS)
def compensated_sum(x):
    # Neumaier's variant of Kahan summation
    s = 0.0
    c = 0.0
    for v in x:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@njit(**_OPTS)
def poisson_binomial_pmf(probs):
    n = probs.size
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for i in range(n):
        p = probs[i]
        for k in range(i + 1, 0, -1):
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p
        pmf[0] *= 1.0 - p
    return pmf


@njit(**_OPTS)
def diag_gauss_logpdf(x, mean, var):
    s, m = x.shape
    const = 0.0
    for j in range(m):
        const += math.log(2.0 * math.pi * var[j])
    out = np.empty(s)
    for i in range(s):
        acc = 0.0
        for j in range(m):
            d = x[i, j] - mean[j]
            acc += d * d / var[j]
        out[i] = -0.5 * (acc + const)
    return out


@njit(**_OPTS)
def hamming_similarity_matrix(a, b):
    k, n = a.shape
    l = b.shape[0]
    out = np.empty((k, l))
    for i in range(k):
        for j in range(l):
            same = 0
            for t in range(n):
                if a[i, t] == b[j, t]:
                    same += 1
            out[i, j] = same / n
    return out


@njit(**_OPTS)
def pair_fidelities(psi, phi):
    s, d = psi.shape
    out = np.empty(s)
    for i in range(s):
        re = 0.0
        im = 0.0
        for j in range(d):
            a = psi[i, j]
            b = phi[i, j]
            re += a.real * b.real + a.imag * b.imag
            im += a.real * b.imag - a.imag * b.real
        out[i] = re * re + im * im
    return out
