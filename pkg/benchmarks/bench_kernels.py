"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the comparison does not depend on
COGSEC_DISABLE_NUMBA.  The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from cogsec._kernels import _numba, _numpy
from cogsec.rng import stream


def _cases():
    rng = stream(0, "bench")
    psi = rng.standard_normal((20_000, 64)) + 1j * rng.standard_normal((20_000, 64))
    phi = rng.standard_normal((20_000, 64)) + 1j * rng.standard_normal((20_000, 64))
    bits_a = rng.integers(0, 2, (200, 1000), dtype=np.uint8)
    bits_b = rng.integers(0, 2, (200, 1000), dtype=np.uint8)
    x = rng.standard_normal((4000, 50))
    return {
        "binom_logpmf(n=1e5)": ("binom_logpmf", (100_000, 0.3)),
        "compensated_sum(1e6)": ("compensated_sum", (rng.random(1_000_000),)),
        "poisson_binomial_pmf(2000)": ("poisson_binomial_pmf", (rng.random(2000),)),
        "diag_gauss_logpdf(4000x50)": ("diag_gauss_logpdf", (x, np.zeros(50), np.ones(50))),
        "hamming_similarity_matrix(200x200x1000)": ("hamming_similarity_matrix", (bits_a, bits_b)),
        "pair_fidelities(20000x64)": ("pair_fidelities", (psi, phi)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':42s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, (name, call_args) in _cases().items():
        f_np = getattr(_numpy, name)
        f_nb = getattr(_numba, name)
        ref = f_np(*call_args)
        got = f_nb(*call_args)  # compile outside the timed region
        assert np.allclose(ref, got, rtol=1e-9, atol=1e-12), label
        t_np = min(timeit.repeat(lambda: f_np(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: f_nb(*call_args), number=1, repeat=args.repeat))
        print(f"{label:42s} {1e3 * t_np:10.2f} {1e3 * t_nb:10.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
