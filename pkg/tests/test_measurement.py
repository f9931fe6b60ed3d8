import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from cogsec.measurement import (
    NoisyMeasurementModel,
    agreement_rate,
    binomial_pmf,
    concentration_interval,
    concentration_table,
    effective_flip_moments,
    exact_tail,
    exact_tails_all,
    heterogeneous_similarity_pmf,
    log_mass,
    max_tail_error,
    mixture_pmf,
    noisy_distance_pmf,
    outside_probability,
    published_compound_pmf,
    published_gaussian_tail,
    random_pair_distance_pmf,
    similarity_tail,
    similarity_tail_exact,
    true_vs_noisy_tail,
    true_vs_noisy_tail_exact,
)
from cogsec.rng import stream

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_model_validation():
    assert NoisyMeasurementModel(10, 0.9, 0.1).rate == pytest.approx(0.82)
    with pytest.raises(ValueError):
        NoisyMeasurementModel(0, 0.5, 0.5)
    with pytest.raises(ValueError):
        NoisyMeasurementModel(10, 1.5, 0.5)


def test_mixture_pmf_cases():
    assert mixture_pmf(1, 0.3, 0.0) == pytest.approx(0.3)
    assert mixture_pmf(1, 0.5, 0.17) == pytest.approx(0.5)
    assert mixture_pmf(1, 0.9, 0.1) == pytest.approx(0.82)
    with pytest.raises(ValueError):
        mixture_pmf(2, 0.5, 0.5)


@given(unit, unit)
def test_mixture_pmf_normalized_and_equals_rate(p, q):
    assert mixture_pmf(0, p, q) + mixture_pmf(1, p, q) == pytest.approx(1.0)
    assert mixture_pmf(1, p, q) == pytest.approx(agreement_rate(p, q))


def test_moments_cases():
    assert effective_flip_moments(100, 0.3, 0.0) == pytest.approx((30.0, 21.0))
    assert effective_flip_moments(100, 0.5, 0.5) == pytest.approx((50.0, 25.0))
    assert effective_flip_moments(1000, 0.5, 0.25) == pytest.approx((500.0, 250.0))


def test_moments_against_simulation():
    r = stream(1, "moments")
    n, p, q = 1000, 0.5, 0.25
    # simulate the mixture cogit by cogit: draw the bit, flip with probability q
    bits = r.random((2000, n)) < p
    flips = r.random((2000, n)) < q
    z = (bits ^ flips).sum(axis=1)
    mean, var = effective_flip_moments(n, p, q)
    assert abs(z.mean() - mean) < 3 * math.sqrt(var / z.size)
    assert abs(z.var() - var) < 3 * var * math.sqrt(2 / z.size)


def test_similarity_tail_limits_and_median():
    mean, _ = effective_flip_moments(1000, 0.5, 0.25)
    assert similarity_tail(mean, 1000, 0.5, 0.25) == pytest.approx(0.5)
    assert similarity_tail(-1e9, 1000, 0.5, 0.25) == 1.0
    assert similarity_tail(1e9, 1000, 0.5, 0.25) == 0.0
    assert similarity_tail(3, 10, 0.0, 0.0) == 0.0  # zero variance: step function
    assert similarity_tail(-1, 10, 0.0, 0.0) == 1.0


def test_similarity_tail_vectorized():
    z = np.array([400.0, 500.0, 600.0])
    out = similarity_tail(z, 1000, 0.5, 0.3)
    assert out.shape == (3,) and np.all(np.diff(out) < 0)


@pytest.mark.parametrize("q", [0.0, 0.1, 0.25, 0.5])
def test_random_pair_outside_band(q):
    # p = 1/2 makes the agreement rate 1/2 whatever q is
    out = outside_probability(1000, agreement_rate(0.5, q), 0.425, 0.575)
    assert out == pytest.approx(1.720233089e-06, rel=1e-6)


def test_true_vs_noisy_tail():
    assert true_vs_noisy_tail_exact(1000, 1000, 0.0) == 1.0
    assert float(noisy_distance_pmf(1000, 0.0)[0]) == 1.0
    assert true_vs_noisy_tail(750, 1000, 0.25) == pytest.approx(0.5)


def test_q_quarter_interval():
    # [0.185, 0.315] leaves 1.92e-6 outside: it is the 1 - 2e-6 interval;
    # the strict 1 - 1e-6 interval is one lattice step wider on each side
    row = concentration_interval(1000, 0.25, 1 - 2e-6)
    assert (row.low, row.high) == pytest.approx((0.185, 0.315), abs=1e-12)
    assert row.outside_mass == pytest.approx(1.923760522e-06, rel=1e-6)
    strict = concentration_interval(1000, 0.25, 1 - 1e-6)
    assert (strict.low, strict.high) == pytest.approx((0.183, 0.317), abs=1e-12)
    assert strict.outside_mass <= 1e-6


def test_q_third_interval():
    row = concentration_interval(1000, 1 / 3, 1 - 2e-6)
    assert row.low == pytest.approx(0.26267, abs=1e-5)
    assert row.high == pytest.approx(0.404, abs=1e-9)
    assert row.high < 1.0


def test_concentration_table_rows():
    rows = concentration_table([1000], [0.5, 0.25], [1 - 2e-6])
    assert [(r.low, r.high) for r in rows] == pytest.approx([(0.425, 0.575), (0.185, 0.315)])
    assert concentration_table([4], [0.0], [0.9])[0].low == 0.0
    assert concentration_table([4], [0.0], [0.9])[0].high == 0.0
    with pytest.raises(ValueError):
        concentration_table([4], [0.1], [1.0])


@given(st.integers(1, 300), st.floats(0.01, 0.99), st.floats(0.5, 0.9999))
def test_concentration_interval_is_tightest(n, q, mass):
    row = concentration_interval(n, q, mass)
    assert 1 - row.outside_mass >= mass - 1e-12
    k = np.arange(n + 1)
    pmf = binom.pmf(k, n, q)
    dev = np.round(np.abs(k - n * q), 9)
    narrower = dev[dev < round(row.half_width * n, 9) - 1e-9]
    if narrower.size:
        w = narrower.max()
        assert pmf[dev <= w].sum() < mass + 1e-9


def test_exact_tail_matches_scipy():
    for z in (0, 480, 500, 550, 1000, 1001):
        assert exact_tail(z, 1000, 0.5) == pytest.approx(binom.sf(z - 1, 1000, 0.5), rel=1e-10, abs=1e-300)


def test_exact_tail_deep_underflow():
    v = exact_tail(990, 1000, 0.5)
    ref = math.exp(binom.logsf(989, 1000, 0.5))
    assert v == pytest.approx(ref, rel=1e-8)
    assert 0 < v < 1e-270


def test_exact_tails_all_monotone_and_consistent():
    t = exact_tails_all(200, 0.3)
    assert t[0] == pytest.approx(1.0) and t[-1] == 0.0
    assert np.all(np.diff(t) <= 1e-15)
    assert t[70] == pytest.approx(exact_tail(70, 200, 0.3), rel=1e-12)
    assert similarity_tail_exact(70, 200, 0.3, 0.0) == pytest.approx(exact_tail(70, 200, 0.3))


def test_log_mass_empty():
    assert log_mass(np.log(binomial_pmf(5, 0.5)), np.zeros(6, bool)) == -math.inf


def test_gaussian_tail_error_over_all_thresholds():
    # frozen from the exact/erfc comparison at every integer z
    assert max_tail_error(1000, 0.5) == pytest.approx(2.716595659e-05, rel=1e-6)
    assert max_tail_error(1000, 0.5) < 1e-3
    assert max_tail_error(1000, 0.5, continuity=False) > 1e-3
    # a skewed agreement rate degrades the approximation
    assert max_tail_error(1000, agreement_rate(0.9, 0.1)) > 1e-3


def test_published_gaussian_tail_goes_negative():
    n, p, q = 1000, 0.5, 0.25
    assert published_gaussian_tail(500, n, p, q) == pytest.approx(0.5)
    assert published_gaussian_tail(1000, n, p, q) == pytest.approx(0.5 - 1 / math.sqrt(2))
    assert published_gaussian_tail(1000, n, p, q) < 0


def test_published_compound_pmf_is_not_normalized():
    n, p, q = 10, 0.7, 0.2
    total = sum(published_compound_pmf(k, n, p, q) - (published_compound_pmf(k - 1, n, p, q) if k else 0)
                for k in range(n + 1))
    assert abs(total - 1.0) > 0.1
    assert binomial_pmf(n, agreement_rate(p, q)).sum() == pytest.approx(1.0)


def test_random_pair_law_and_heterogeneous_law():
    assert np.allclose(random_pair_distance_pmf(20), binom.pmf(np.arange(21), 20, 0.5))
    het = heterogeneous_similarity_pmf(np.full(20, 0.3), 0.1)
    assert np.allclose(het, binomial_pmf(20, agreement_rate(0.3, 0.1)), atol=1e-14)


def test_wide_interval_n10000():
    assert outside_probability(10_000, 0.5, 0.476, 0.524) == pytest.approx(1.5026e-6, rel=1e-4)
