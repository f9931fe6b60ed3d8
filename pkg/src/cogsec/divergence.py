"""Jensen-Shannon distances, classical and quantum, plus the Roga bound.

All functions return the *distance* (square root of the divergence).  The
log base defaults to 2, which puts every value in [0, 1]; base e is
available for natural-log formulas.  Zero probabilities and eigenvalues
below ``EIG_CLIP`` contribute nothing (0 log 0 = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .projective import _as_array, validate_density

EIG_CLIP = 1e-14
PROB_ATOL = 1e-10
BASES = {2: math.log(2.0), math.e: 1.0, "e": 1.0, 2.0: math.log(2.0)}


def _log_scale(base) -> float:
    try:
        return BASES[base]
    except KeyError:
        raise ValueError(f"log base must be 2 or e, got {base!r}") from None


def as_probability_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size < 1:
        raise DimensionError("empty probability vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_ATOL:
        raise ValidationError("probabilities must be nonnegative and sum to 1")
    return p


def shannon_entropy(p, base=2) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_CLIP]
    return float(-(p * np.log(p)).sum() / _log_scale(base))


def jsd_classical(p, q, base=2) -> float:
    """sqrt(H(M) - (H(P) + H(Q)) / 2) with M = (P + Q) / 2."""
    p = as_probability_vector(p)
    q = as_probability_vector(q)
    if p.size != q.size:
        raise DimensionError(f"distribution lengths differ: {p.size} vs {q.size}")
    m = 0.5 * (p + q)
    # per-term form avoids the cancellation of the entropy-difference form
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p > 0, p * np.log(p / m), 0.0)
        tq = np.where(q > 0, q * np.log(q / m), 0.0)
    div = 0.5 * (tp.sum() + tq.sum()) / _log_scale(base)
    return float(math.sqrt(max(div, 0.0)))


def von_neumann_entropy(rho, base=2) -> float:
    m = _as_array(rho)
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return shannon_entropy(w, base)


def qjsd(rho, sigma, base=2, validate: bool = True) -> float:
    """Quantum Jensen-Shannon distance.

    Uses the identity  (1/2)[Tr rho(log rho - log tau) + Tr sigma(log sigma -
    log tau)] = S(tau) - (S(rho) + S(sigma)) / 2  with tau = (rho + sigma)/2,
    evaluated from eigenvalues.
    """
    r = _as_array(rho)
    s = _as_array(sigma)
    if r.ndim == 1:
        r = np.outer(r, r.conj())
    if s.ndim == 1:
        s = np.outer(s, s.conj())
    if r.shape != s.shape:
        raise DimensionError(f"density shapes differ: {r.shape} vs {s.shape}")
    if validate:
        validate_density(r)
        validate_density(s)
    tau = 0.5 * (r + s)
    div = von_neumann_entropy(tau, base) - 0.5 * (von_neumann_entropy(r, base)
                                                  + von_neumann_entropy(s, base))
    return float(math.sqrt(min(max(div, 0.0), 1.0 if base in (2, 2.0) else math.log(2.0))))


def amplitude_state(p) -> np.ndarray:
    """|psi> = sum_i sqrt(p_i) |i>."""
    return np.sqrt(as_probability_vector(p)).astype(np.complex128)


def qjsd_pure_reduction(p, q, base=2) -> float:
    """Shortcut that scores the states sum sqrt(p_i)|i>, sum sqrt(q_i)|i> by jsd_classical(p, q)."""
    return jsd_classical(p, q, base)


@dataclass(frozen=True)
class ReductionReport:
    reduction: float
    exact: float

    @property
    def gap(self) -> float:
        return self.exact - self.reduction


def pure_reduction_report(p, q, base=2) -> ReductionReport:
    """Side-by-side shortcut value and exact QJSD of the two rank-1 projectors."""
    a = amplitude_state(p)
    b = amplitude_state(q)
    return ReductionReport(qjsd_pure_reduction(p, q, base),
                           qjsd(np.outer(a, a.conj()), np.outer(b, b.conj()), base))


def roga_bound(b, base=2):
    """sqrt(h(x)) with x = b^2 / 2 and h the binary entropy (same base as qjsd)."""
    b = np.asarray(b, dtype=float)
    if np.any((b < 0) | (b > 1 + 1e-12)):
        raise ValueError("b must lie in [0, 1]")
    x = 0.5 * np.clip(b, 0.0, 1.0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(x > 0, x * np.log(x), 0.0) - np.where(x < 1, (1 - x) * np.log1p(-x), 0.0)
    out = np.sqrt(np.maximum(h, 0.0) / _log_scale(base))
    return out[()] if np.ndim(out) == 0 else out
