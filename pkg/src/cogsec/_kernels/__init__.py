"""Hot numerical kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``COGSEC_DISABLE_NUMBA`` is set to a truthy value ("1", "true",
"yes").  Both paths obey identical contracts; ``tests/test_kernels.py``
checks them against each other and ``benchmarks/bench_kernels.py`` times
them side by side.
"""

import os

import numpy as np

from . import _numpy

_FLAG = os.environ.get("COGSEC_DISABLE_NUMBA", "").strip().lower()

if _FLAG in ("1", "true", "yes", "on"):
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        _impl = _numpy
        BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "binom_logpmf",
    "compensated_sum",
    "poisson_binomial_pmf",
    "diag_gauss_logpdf",
    "hamming_similarity_matrix",
    "pair_fidelities",
]


def binom_logpmf(n: int, r: float) -> np.ndarray:
    """log Pr[K = k] for K ~ Binomial(n, r), k = 0..n."""
    return _impl.binom_logpmf(int(n), float(r))


def compensated_sum(x) -> float:
    return float(_impl.compensated_sum(np.ascontiguousarray(x, dtype=np.float64)))


def poisson_binomial_pmf(probs) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(probs[i]) by sequential convolution."""
    return _impl.poisson_binomial_pmf(np.ascontiguousarray(probs, dtype=np.float64))


def diag_gauss_logpdf(x, mean, var) -> np.ndarray:
    """Row-wise log-density of N(mean, diag(var)); all variances must be > 0."""
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    return _impl.diag_gauss_logpdf(x, np.ascontiguousarray(mean, dtype=np.float64),
                                   np.ascontiguousarray(var, dtype=np.float64))


def hamming_similarity_matrix(a, b) -> np.ndarray:
    """1 - normalized Hamming distance between every row of ``a`` and of ``b``."""
    a = np.ascontiguousarray(np.atleast_2d(a), dtype=np.uint8)
    b = np.ascontiguousarray(np.atleast_2d(b), dtype=np.uint8)
    return _impl.hamming_similarity_matrix(a, b)


def pair_fidelities(psi, phi) -> np.ndarray:
    """|<psi_i|phi_i>|^2 for each row pair."""
    return _impl.pair_fidelities(np.ascontiguousarray(psi, dtype=np.complex128),
                                 np.ascontiguousarray(phi, dtype=np.complex128))
