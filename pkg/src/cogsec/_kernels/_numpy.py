"""Pure-numpy reference implementations of the hot kernels."""

import math

import numpy as np
from scipy.special import gammaln


def binom_logpmf(n, r):
    k = np.arange(n + 1, dtype=np.float64)
    out = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if r <= 0.0:
            tail = np.where(k == 0, 0.0, -np.inf)
        elif r >= 1.0:
            tail = np.where(k == n, 0.0, -np.inf)
        else:
            tail = k * math.log(r) + (n - k) * math.log1p(-r)
    return out + tail


def compensated_sum(x):
    return math.fsum(np.asarray(x, dtype=np.float64).tolist())


def poisson_binomial_pmf(probs):
    probs = np.asarray(probs, dtype=np.float64)
    pmf = np.zeros(probs.size + 1)
    pmf[0] = 1.0
    for i, p in enumerate(probs):
        head = pmf[: i + 2].copy()
        pmf[1 : i + 2] = head[1:] * (1.0 - p) + head[:-1] * p
        pmf[0] = head[0] * (1.0 - p)
    return pmf


def diag_gauss_logpdf(x, mean, var):
    x = np.atleast_2d(x)
    z = (x - mean) ** 2 / var
    return -0.5 * (z.sum(axis=1) + np.log(2.0 * np.pi * var).sum())


def hamming_similarity_matrix(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[1]
    # matches = ones-overlap + zeros-overlap
    matches = a @ b.T + (1.0 - a) @ (1.0 - b).T
    return matches / n


def pair_fidelities(psi, phi):
    ov = np.einsum("ij,ij->i", psi.conj(), phi)
    return ov.real ** 2 + ov.imag ** 2
