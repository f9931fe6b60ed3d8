"""Noisy binary measurement statistics.

Model: each of ``n`` cogits reads 1 with probability ``p`` before noise and
every readout is flipped independently with probability ``q``.  The number
of agreeing positions ``Z`` between two such noisy readouts (or between a
noisy readout and the truth) is binomial, and its tails concentrate sharply
as ``n`` grows.

Gaussian tails follow the erfc form ``1/2 erfc((z - mean) / sqrt(2 var))``.
Exact tails are summed in log space with compensated summation so that
masses down to ~1e-300 are resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from . import _kernels


@dataclass(frozen=True)
class NoisyMeasurementModel:
    n: int
    p: float
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def rate(self) -> float:
        return agreement_rate(self.p, self.q)


def mixture_pmf(x: int, p: float, q: float) -> float:
    """f(x) = (1-q) p^x (1-p)^(1-x) + q (1-p)^x p^(1-x) for x in {0, 1}."""
    if x not in (0, 1):
        raise ValueError("x must be 0 or 1")
    return (1 - q) * p ** x * (1 - p) ** (1 - x) + q * (1 - p) ** x * p ** (1 - x)


def agreement_rate(p: float, q: float) -> float:
    """Per-trial success probability p + q - 2pq (= mixture_pmf(1, p, q))."""
    return p + q - 2 * p * q


def effective_flip_moments(n: int, p: float, q: float) -> tuple[float, float]:
    r = agreement_rate(p, q)
    return n * r, n * r * (1 - r)


def _gauss_tail(z, mean, var, continuity):
    z = np.asarray(z, dtype=float)
    if continuity:
        z = z - 0.5
    if var <= 0:
        return np.where(z <= mean, 1.0, 0.0)
    return 0.5 * erfc((z - mean) / np.sqrt(2.0 * var))


def similarity_tail(z, n: int, p: float, q: float, continuity: bool = False):
    """Gaussian approximation to Pr[Z >= z].

    With ``continuity=True`` the tail is evaluated at ``z - 1/2``, the usual
    correction when comparing against the integer-valued exact law.  For a
    zero-variance model the exact step function is returned.
    """
    mean, var = effective_flip_moments(n, p, q)
    out = _gauss_tail(z, mean, var, continuity)
    return out[()] if np.ndim(out) == 0 else out


def published_gaussian_tail(z, n: int, p: float, q: float):
    """The published tail 1/2 - (1/sqrt 2) erf((z - mean) / sqrt(2 var)).

    Kept for the discrepancy report: the 1/sqrt 2 prefactor drives the value
    below zero for large z (limit 1/2 - 1/sqrt 2), while 1/2 gives the
    standard erfc tail used by :func:`similarity_tail`.
    """
    mean, var = effective_flip_moments(n, p, q)
    out = 0.5 - erf((np.asarray(z, dtype=float) - mean) / np.sqrt(2.0 * var)) / math.sqrt(2.0)
    return out[()] if np.ndim(out) == 0 else out


def true_vs_noisy_tail(z, n: int, q: float, continuity: bool = False):
    """Gaussian approximation to Pr[Z >= z] for agreement with the truth.

    Z ~ Binomial(n, 1 - q): mean n(1-q), variance n q (1-q).
    """
    out = _gauss_tail(z, n * (1 - q), n * q * (1 - q), continuity)
    return out[()] if np.ndim(out) == 0 else out


# -- exact laws -------------------------------------------------------------

def binomial_logpmf(n: int, r: float) -> np.ndarray:
    return _kernels.binom_logpmf(n, r)


def binomial_pmf(n: int, r: float) -> np.ndarray:
    return np.exp(binomial_logpmf(n, r))


def log_mass(logpmf: np.ndarray, mask) -> float:
    """log of the total mass of ``exp(logpmf)`` over ``mask``.

    Terms are scaled by the largest one, added with compensated summation,
    and scaled back, so small tails neither underflow nor lose digits.
    """
    sel = logpmf[np.asarray(mask, dtype=bool)]
    sel = sel[np.isfinite(sel)]
    if sel.size == 0:
        return -math.inf
    top = sel.max()
    return top + math.log(_kernels.compensated_sum(np.exp(sel - top)))


def exact_tail(z, n: int, r: float) -> float | np.ndarray:
    """Pr[Z >= z] for Z ~ Binomial(n, r)."""
    lp = binomial_logpmf(n, r)
    k = np.arange(n + 1)
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.array([math.exp(log_mass(lp, k >= zi)) for zi in zs])
    return out[0] if np.ndim(z) == 0 else out


def exact_tails_all(n: int, r: float) -> np.ndarray:
    """Pr[Z >= k] for every k in 0..n+1, via reverse cumulative log-sum-exp."""
    lp = binomial_logpmf(n, r)
    out = np.empty(n + 2)
    out[n + 1] = 0.0
    # reverse running logsumexp keeps relative accuracy deep in the upper tail
    acc = -math.inf
    for k in range(n, -1, -1):
        acc = np.logaddexp(acc, lp[k])
        out[k] = math.exp(acc)
    return np.minimum(out, 1.0)


def similarity_tail_exact(z, n: int, p: float, q: float):
    return exact_tail(z, n, agreement_rate(p, q))


def true_vs_noisy_tail_exact(z, n: int, q: float):
    return exact_tail(z, n, 1.0 - q)


def noisy_distance_pmf(n: int, q: float) -> np.ndarray:
    """Exact law of the Hamming distance between a noisy readout and the truth."""
    return binomial_pmf(n, q)


def random_pair_distance_pmf(n: int) -> np.ndarray:
    """Exact distance law between readouts of two random hypervectors.

    Each position disagrees with probability 1/2 whatever the flip rate,
    so the law is Binomial(n, 1/2).
    """
    return binomial_pmf(n, 0.5)


def heterogeneous_similarity_pmf(p, q: float) -> np.ndarray:
    """Exact law of Z when cogit i has its own p_i (Poisson-binomial)."""
    p = np.asarray(p, dtype=float)
    return _kernels.poisson_binomial_pmf(p + q - 2 * p * q)


def published_compound_pmf(k: int, n: int, p: float, q: float) -> float:
    """The published compound expression sum_{j=0..k} f(j)^n, evaluated literally.

    Kept only for the discrepancy report: summed over k it is not a
    normalized distribution, so exact laws here use binomial convolution.
    """
    def f(j):
        return (1 - q) * p ** j * (1 - p) ** (1 - j) + q * (1 - p) ** j * p ** (1 - j)
    return float(sum(f(j) ** n for j in range(k + 1)))


# -- concentration intervals ------------------------------------------------

@dataclass(frozen=True)
class ConcentrationRow:
    n: int
    q: float
    mass: float
    low: float
    high: float
    half_width: float
    outside_mass: float


def concentration_interval(n: int, q: float, mass: float) -> ConcentrationRow:
    """Tightest interval symmetric about the mean holding at least ``mass``.

    Distances are Binomial(n, q) counts normalized by n; ``q = 0.5`` is the
    random-pair law.  The interval is closed and its half-width is taken
    from the lattice of distinct |k - nq| values.
    """
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie in (0, 1)")
    lp = binomial_logpmf(n, q)
    mean = n * q
    dev = np.round(np.abs(np.arange(n + 1) - mean), 9)
    order = np.argsort(-dev, kind="stable")
    # log mass of everything at least as far out, accumulated from the edges in
    log_outer = np.logaddexp.accumulate(lp[order])
    dev_sorted = dev[order]
    log_target = math.log1p(-mass)
    widths = np.unique(dev)
    for w in widths:
        n_out = int(np.count_nonzero(dev_sorted > w))
        lo_out = -math.inf if n_out == 0 else float(log_outer[n_out - 1])
        if lo_out <= log_target:
            break
    return ConcentrationRow(n, q, mass, float((mean - w) / n), float((mean + w) / n),
                            float(w / n), math.exp(lo_out))


def concentration_table(n_list, q_list, mass_list) -> list[ConcentrationRow]:
    for m in mass_list:
        if not 0.0 < m < 1.0:
            raise ValueError("all masses must lie in (0, 1)")
    return [concentration_interval(n, q, m) for n in n_list for q in q_list for m in mass_list]


def outside_probability(n: int, r: float, low: float, high: float) -> float:
    """Pr[Z/n < low or Z/n > high] for Z ~ Binomial(n, r)."""
    lp = binomial_logpmf(n, r)
    k = np.arange(n + 1)
    x = k / n
    return math.exp(log_mass(lp, (x < low - 1e-12) | (x > high + 1e-12)))


def max_tail_error(n: int, r: float, continuity: bool = True) -> float:
    """Largest |Gaussian - exact| over every integer threshold z in [0, n+1]."""
    z = np.arange(n + 2)
    exact = exact_tails_all(n, r)
    approx = _gauss_tail(z, n * r, n * r * (1 - r), continuity)
    return float(np.max(np.abs(approx - exact)))
