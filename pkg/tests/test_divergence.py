import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogsec.divergence import (
    amplitude_state,
    as_probability_vector,
    jsd_classical,
    pure_reduction_report,
    qjsd,
    qjsd_pure_reduction,
    roga_bound,
    shannon_entropy,
    von_neumann_entropy,
)
from cogsec.errors import DimensionError, ValidationError
from cogsec.rng import stream
from cogsec.state_stats import bures_normalized

from _helpers import random_density


def _h2(x):
    return -sum(t * math.log2(t) for t in (x, 1 - x) if t > 0)


def _pure_qjsd_oracle(p, q):
    # tau of two pure states has eigenvalues (1 +- |<a|b>|) / 2
    c = float(np.sum(np.sqrt(np.multiply(p, q))))
    return math.sqrt(_h2((1 + c) / 2))


def dist(size):
    return st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=size, max_size=size).filter(
        lambda v: sum(v) > 1e-3).map(lambda v: np.array(v) / sum(v))


def test_probability_vector_validation():
    with pytest.raises(ValidationError):
        as_probability_vector([0.5, 0.6])
    with pytest.raises(ValidationError):
        as_probability_vector([1.5, -0.5])
    with pytest.raises(DimensionError):
        as_probability_vector([])
    with pytest.raises(DimensionError):
        jsd_classical([1.0], [0.5, 0.5])


def test_entropies():
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert shannon_entropy([0.5, 0.5], base="e") == pytest.approx(math.log(2))
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        shannon_entropy([1.0], base=10)


def test_jsd_classical_cases():
    assert jsd_classical([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert jsd_classical([1, 0], [0, 1]) == pytest.approx(1.0)
    assert jsd_classical([0.5, 0.5], [1, 0]) == pytest.approx(math.sqrt(0.31127812445913283), abs=1e-12)
    assert jsd_classical([0.5, 0.5], [1, 0]) == pytest.approx(0.5579230452841438, abs=1e-15)


@given(dist(4), dist(4), dist(4))
def test_jsd_is_a_bounded_metric(p, q, r):
    d = jsd_classical
    assert 0.0 <= d(p, q) <= 1.0
    assert d(p, q) == pytest.approx(d(q, p), abs=1e-12)
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-9


def test_qjsd_cases():
    rho = random_density(3, stream(1))
    assert qjsd(rho, rho) == pytest.approx(0.0, abs=1e-7)
    assert qjsd([1, 0], [0, 1]) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        qjsd(np.eye(2) / 2, np.eye(3) / 3)
    with pytest.raises(ValidationError):
        qjsd(np.eye(2), np.eye(2) / 2)


def test_qjsd_diagonal_reduction_1000_pairs():
    r = stream(2, "diag")
    worst = 0.0
    for _ in range(1000):
        d = int(r.integers(2, 9))
        p, q = r.dirichlet(np.ones(d)), r.dirichlet(np.ones(d))
        worst = max(worst, abs(qjsd(np.diag(p), np.diag(q)) - jsd_classical(p, q)))
    assert worst < 1e-9


@given(st.integers(0, 10_000))
def test_qjsd_symmetric_bounded_unitarily_invariant(seed):
    r = stream(seed, "qjsd-prop")
    a, b = random_density(3, r), random_density(3, r)
    v = qjsd(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(qjsd(b, a), abs=1e-10)
    g = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
    u, _ = np.linalg.qr(g)
    assert v == pytest.approx(qjsd(u @ a @ u.conj().T, u @ b @ u.conj().T), abs=1e-7)


def test_pure_reduction_agreement_cases():
    assert qjsd_pure_reduction([0.3, 0.7], [0.3, 0.7]) == 0.0
    rep = pure_reduction_report([0.3, 0.7], [0.3, 0.7])
    assert rep.exact == pytest.approx(0.0, abs=1e-7)
    rep = pure_reduction_report([1, 0], [0, 1])
    assert rep.reduction == pytest.approx(1.0) and rep.exact == pytest.approx(1.0)


@pytest.mark.parametrize("p,q", [((0.5, 0.5), (0.9, 0.1)), ((0.5, 0.5), (1.0, 0.0))])
def test_pure_reduction_side_by_side(p, q):
    rep = pure_reduction_report(p, q)
    assert rep.reduction == pytest.approx(jsd_classical(p, q))
    assert rep.exact == pytest.approx(_pure_qjsd_oracle(p, q), abs=1e-9)
    assert rep.gap == pytest.approx(rep.exact - rep.reduction)


def test_amplitude_state_is_normalized():
    assert np.linalg.norm(amplitude_state([0.2, 0.3, 0.5])) == pytest.approx(1.0)


def test_roga_bound_endpoints():
    assert roga_bound(0.0) == 0.0
    assert roga_bound(1.0) == pytest.approx(1.0)
    assert roga_bound(1.0, base="e") == pytest.approx(math.sqrt(math.log(2)))
    with pytest.raises(ValueError):
        roga_bound(1.5)


@pytest.mark.parametrize("dim", [2, 4, 8])
def test_roga_bound_dominates(dim):
    r = stream(3, "roga", dim)
    pairs = 10_000 if dim == 4 else 2000
    worst = -1.0
    for _ in range(pairs):
        rank = int(r.integers(1, dim + 1))
        a, b = random_density(dim, r, rank), random_density(dim, r, rank)
        worst = max(worst, qjsd(a, b) - float(roga_bound(bures_normalized(a, b))))
    assert worst <= 1e-9


def test_roga_bound_tight_for_pure_states():
    r = stream(4, "roga-pure")
    for _ in range(50):
        a = r.standard_normal(4) + 1j * r.standard_normal(4)
        b = r.standard_normal(4) + 1j * r.standard_normal(4)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        assert qjsd(a, b) <= roga_bound(bures_normalized(a, b)) + 1e-9
