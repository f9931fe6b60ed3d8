"""Cogit states and the projective holographic algebra.

A cogit is a normalized two-level complex state ``alpha|0> + beta|1>``.  A
:class:`CogitHypervector` holds ``n`` of them in product form, which is the
representation used at hypervector scale (n ~ 10^3 - 10^4).  Entangled or
mixed states live in :class:`DenseState` / :class:`DensityMatrix`, limited to
at most :data:`MAX_DENSE_COGITS` cogits.

Algebra on hypervectors:

* ``bundle``  - per-cogit amplitude sum, renormalized per cogit
* ``bind``    - adds the relative phase of ``y`` to ``x`` (controlled phase);
  the polar angle of ``x`` is kept, so ``bind`` is exactly invertible
* ``unbind``  - subtracts the relative phase (conjugate multiplication)
* ``permute`` - cyclic index rotation, index ``i`` moves to ``(i + j) % n``

Phase information is invisible to computational-basis (``"z"``) measurement,
so similarity between hypervectors is estimated from ``"x"``-basis
measurements by default (:func:`measured_similarity`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from . import _kernels
from .errors import DegenerateBundleError, DimensionError, ValidationError
from .rng import as_generator

NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-10
UNITARY_ATOL = 1e-10
DYNAMICS_ATOL = 1e-8
MAX_DENSE_COGITS = 14

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _frozen(a, dtype=np.complex128):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _as_array(x) -> np.ndarray:
    return np.asarray(x.data if hasattr(x, "data") else x)


# -- single cogit -----------------------------------------------------------

@dataclass(frozen=True)
class Cogit:
    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValidationError(f"cogit not normalized: |a|^2+|b|^2 = {norm!r}")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Cogit":
        return cls(complex(np.cos(theta / 2)), complex(np.exp(1j * phi) * np.sin(theta / 2)))

    @property
    def theta(self) -> float:
        """Bloch polar angle; cos(theta) = Pr[0] - Pr[1]."""
        return float(2.0 * np.arccos(np.clip(abs(self.alpha), 0.0, 1.0)))

    @property
    def phi(self) -> float:
        """Relative phase arg(beta) - arg(alpha) in [0, 2pi); 0 at the poles."""
        if self.alpha == 0 or self.beta == 0:
            return 0.0
        return float(np.angle(self.beta / self.alpha) % (2 * np.pi))

    @property
    def prob_one(self) -> float:
        return abs(self.beta) ** 2


# -- product-form hypervector ----------------------------------------------

class CogitHypervector:
    """Immutable vector of ``n`` cogits stored as two amplitude arrays."""

    __slots__ = ("_alpha", "_beta")

    def __init__(self, alpha, beta, *, normalize: bool = False):
        alpha = np.array(alpha, dtype=np.complex128).reshape(-1)
        beta = np.array(beta, dtype=np.complex128).reshape(-1)
        if alpha.shape != beta.shape:
            raise DimensionError("alpha and beta must have the same length")
        if alpha.size < 1:
            raise DimensionError("a hypervector needs at least one cogit")
        norms = np.abs(alpha) ** 2 + np.abs(beta) ** 2
        if normalize:
            if np.any(norms == 0):
                raise ValidationError("cannot normalize a zero cogit")
            scale = 1.0 / np.sqrt(norms)
            alpha = alpha * scale
            beta = beta * scale
        elif np.max(np.abs(norms - 1.0)) > NORM_ATOL:
            raise ValidationError("cogits not normalized within 1e-12")
        self._alpha = _frozen(alpha)
        self._beta = _frozen(beta)

    @classmethod
    def _wrap(cls, alpha, beta) -> "CogitHypervector":
        # for amplitudes normalized by construction; skips the checks and copies
        out = cls.__new__(cls)
        alpha.setflags(write=False)
        beta.setflags(write=False)
        out._alpha, out._beta = alpha, beta
        return out

    # constructors
    @classmethod
    def from_angles(cls, theta, phi) -> "CogitHypervector":
        theta = np.asarray(theta, dtype=float).reshape(-1)
        phi = np.broadcast_to(np.asarray(phi, dtype=float).reshape(-1), theta.shape)
        if theta.size < 1:
            raise DimensionError("a hypervector needs at least one cogit")
        half = theta / 2
        s = np.sin(half)
        beta = np.empty(theta.shape, dtype=np.complex128)
        beta.real = np.cos(phi) * s
        beta.imag = np.sin(phi) * s
        return cls._wrap(np.cos(half).astype(np.complex128), beta)

    @classmethod
    def from_cogits(cls, cogits) -> "CogitHypervector":
        cogits = list(cogits)
        return cls([c.alpha for c in cogits], [c.beta for c in cogits])

    @classmethod
    def zero_phase(cls, n: int) -> "CogitHypervector":
        """All cogits |+>: the identity element of :func:`bind`."""
        return cls(np.full(n, _INV_SQRT2), np.full(n, _INV_SQRT2))

    @classmethod
    def basis(cls, n: int, bit: int = 0) -> "CogitHypervector":
        if bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")
        return cls(np.full(n, 1.0 - bit), np.full(n, float(bit)))

    @classmethod
    def random(cls, n: int, rng=None, kind: str = "phasor") -> "CogitHypervector":
        """Random hypervector.

        ``kind="phasor"`` gives balanced cogits (theta = pi/2) with uniform
        phase, the setting in which bind/unbind laws hold exactly on
        amplitudes.  ``kind="haar"`` draws each cogit uniformly on the Bloch
        sphere.
        """
        rng = as_generator(rng)
        phi = rng.uniform(0.0, 2 * np.pi, n)
        if kind == "phasor":
            beta = np.empty(n, dtype=np.complex128)
            beta.real = np.cos(phi) * _INV_SQRT2
            beta.imag = np.sin(phi) * _INV_SQRT2
            return cls._wrap(np.full(n, _INV_SQRT2, dtype=np.complex128), beta)
        if kind == "haar":
            theta = np.arccos(rng.uniform(-1.0, 1.0, n))
        else:
            raise ValueError(f"unknown hypervector kind {kind!r}")
        return cls.from_angles(theta, phi)

    # accessors
    @property
    def alpha(self) -> np.ndarray:
        return self._alpha

    @property
    def beta(self) -> np.ndarray:
        return self._beta

    @property
    def n(self) -> int:
        return self._alpha.size

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> Cogit:
        return Cogit(complex(self._alpha[i]), complex(self._beta[i]))

    def __iter__(self):
        for i in range(self.n):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, CogitHypervector):
            return NotImplemented
        return np.array_equal(self._alpha, other._alpha) and np.array_equal(self._beta, other._beta)

    __hash__ = None

    def __repr__(self):
        return f"CogitHypervector(n={self.n})"

    def isclose(self, other: "CogitHypervector", atol: float = 1e-12) -> bool:
        _check_same_n(self, other)
        return bool(np.allclose(self._alpha, other._alpha, rtol=0, atol=atol)
                    and np.allclose(self._beta, other._beta, rtol=0, atol=atol))

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.arccos(np.clip(np.abs(self._alpha), 0.0, 1.0))

    @property
    def phi(self) -> np.ndarray:
        return np.angle(self.relative_phase()) % (2 * np.pi)

    def relative_phase(self) -> np.ndarray:
        """Unit complex numbers e^{i phi}; 1 where a cogit sits on a pole."""
        return _relative_phase(self._alpha, self._beta)

    def probabilities(self, basis: str = "z") -> np.ndarray:
        """Per-cogit Pr[outcome 1] in the given measurement basis.

        ``"z"``: |beta|^2.  ``"x"``: |<-|psi>|^2 = |alpha - beta|^2 / 2.
        """
        if basis == "z":
            return np.abs(self._beta) ** 2
        if basis == "x":
            return np.clip(np.abs(self._alpha - self._beta) ** 2 / 2.0, 0.0, 1.0)
        raise ValueError(f"unknown basis {basis!r}")

    def to_dense(self) -> "DenseState":
        """Tensor product state; cogit 0 is the most significant qubit."""
        if self.n > MAX_DENSE_COGITS:
            raise DimensionError(f"dense form limited to {MAX_DENSE_COGITS} cogits")
        psi = np.ones(1, dtype=np.complex128)
        for a, b in zip(self._alpha, self._beta):
            psi = np.kron(psi, np.array([a, b]))
        return DenseState(psi, normalize=True)


def _relative_phase(alpha, beta):
    aa = np.abs(alpha)
    ab = np.abs(beta)
    pole = (aa == 0) | (ab == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = (beta / np.where(pole, 1.0, ab)) * (np.conj(alpha) / np.where(pole, 1.0, aa))
    return np.where(pole, 1.0 + 0j, u)


def _check_same_n(*xs):
    sizes = {x.n for x in xs}
    if len(sizes) != 1:
        raise DimensionError(f"hypervector lengths differ: {sorted(sizes)}")


# -- algebra -----------------------------------------------------------------

def bundle(inputs, *, on_degenerate: str = "resolve", return_mask: bool = False):
    """Superpose hypervectors cogit by cogit.

    Where an amplitude sum vanishes (e.g. ``x`` bundled with ``-x``) the cogit
    is set to |0> when ``on_degenerate="resolve"``, or
    :class:`DegenerateBundleError` is raised when ``"raise"``.  With
    ``return_mask=True`` the boolean degeneracy mask is returned as well.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("bundle needs at least one input")
    _check_same_n(*inputs)
    alpha = np.sum([x.alpha for x in inputs], axis=0)
    beta = np.sum([x.beta for x in inputs], axis=0)
    norm = np.sqrt(np.abs(alpha) ** 2 + np.abs(beta) ** 2)
    degenerate = norm < NORM_ATOL * len(inputs)
    if np.any(degenerate):
        if on_degenerate == "raise":
            raise DegenerateBundleError(
                f"{int(degenerate.sum())} cogit sum(s) have zero norm")
        if on_degenerate != "resolve":
            raise ValueError(f"unknown on_degenerate policy {on_degenerate!r}")
        alpha = np.where(degenerate, 1.0, alpha)
        beta = np.where(degenerate, 0.0, beta)
        norm = np.where(degenerate, 1.0, norm)
    out = CogitHypervector(alpha / norm, beta / norm, normalize=True)
    return (out, degenerate) if return_mask else out


def bind(x: CogitHypervector, y: CogitHypervector) -> CogitHypervector:
    """Add y's relative phase to every cogit of x; x's polar angle is kept."""
    _check_same_n(x, y)
    return CogitHypervector(x.alpha, x.beta * y.relative_phase(), normalize=True)


def unbind(s: CogitHypervector, x: CogitHypervector) -> CogitHypervector:
    """Remove x's relative phase from s (inverse of :func:`bind`)."""
    _check_same_n(s, x)
    return CogitHypervector(s.alpha, s.beta * np.conj(x.relative_phase()), normalize=True)


def permute(x: CogitHypervector, j: int) -> CogitHypervector:
    """Rotate indices: cogit ``i`` moves to ``(i + j) % n``."""
    j = int(j) % x.n
    return CogitHypervector._wrap(np.roll(x.alpha, j), np.roll(x.beta, j))


# -- dense states ------------------------------------------------------------

class DenseState:
    """Normalized complex state vector of dimension D."""

    __slots__ = ("_data",)

    def __init__(self, amplitudes, *, normalize: bool = False):
        a = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if a.size < 1:
            raise DimensionError("empty state vector")
        nrm = np.linalg.norm(a)
        if normalize:
            if nrm == 0:
                raise ValidationError("cannot normalize the zero vector")
            a = a / nrm
        elif abs(nrm - 1.0) > NORM_ATOL:
            raise ValidationError(f"state norm {nrm!r} differs from 1")
        self._data = _frozen(a)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.size

    @property
    def n_cogits(self) -> int:
        return _cogit_count(self.dim)

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self):
        return f"DenseState(dim={self.dim})"

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self._data, self._data.conj()))


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    __slots__ = ("_data",)

    def __init__(self, entries, *, atol: float = HERMITIAN_ATOL):
        m = np.array(entries, dtype=np.complex128)
        validate_density(m, atol=atol)
        self._data = _frozen(m)

    @classmethod
    def from_state(cls, psi) -> "DensityMatrix":
        v = _as_array(psi).reshape(-1)
        return cls(np.outer(v, v.conj()))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


class UnitaryOperator:
    """D x D unitary matrix."""

    __slots__ = ("_data",)

    def __init__(self, entries, *, atol: float = UNITARY_ATOL):
        m = np.array(entries, dtype=np.complex128)
        validate_unitary(m, atol=atol)
        self._data = _frozen(m)

    @classmethod
    def identity(cls, dim: int) -> "UnitaryOperator":
        return cls(np.eye(dim))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    @property
    def H(self) -> "UnitaryOperator":  # noqa: N802 - conjugate transpose
        return UnitaryOperator(self._data.conj().T)

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self):
        return f"UnitaryOperator(dim={self.dim})"


def validate_density(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > atol:
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(m).real
    if abs(tr - 1.0) > atol:
        raise ValidationError(f"density matrix trace {tr!r} differs from 1")
    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -atol:
        raise ValidationError("density matrix has negative eigenvalues")


def validate_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    dev = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
    if dev > atol:
        raise ValidationError(f"operator deviates from unitarity by {dev:.3g}")


def _cogit_count(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def random_unitary(dim: int, rng=None) -> UnitaryOperator:
    """Haar-random unitary."""
    if dim == 1:
        return UnitaryOperator(np.exp(2j * np.pi * as_generator(rng).random()) * np.eye(1))
    return UnitaryOperator(unitary_group.rvs(dim, random_state=as_generator(rng)))


def permutation_matrix(n_cogits: int, j: int) -> np.ndarray:
    """Real permutation matrix moving tensor factor k to position (k + j) % N."""
    dim = 1 << n_cogits
    eye = np.eye(dim).reshape((dim,) + (2,) * n_cogits)
    src = list(range(1, n_cogits + 1))
    dst = [1 + (k + j) % n_cogits for k in range(n_cogits)]
    return np.moveaxis(eye, src, dst).reshape(dim, dim).T


def permute_dense(psi, j: int) -> DenseState:
    """Dense analogue of :func:`permute` on the tensor factors."""
    v = _as_array(psi).reshape(-1)
    n = _cogit_count(v.size)
    if n == 0:
        return DenseState(v)
    t = v.reshape((2,) * n)
    t = np.moveaxis(t, list(range(n)), [(k + j) % n for k in range(n)])
    return DenseState(t.reshape(-1), normalize=True)


def permute_operator(h, j: int, n_cogits: int) -> UnitaryOperator:
    """Conjugate ``h`` by the cyclic tensor-factor shift ``j``."""
    m = _as_array(h)
    if m.shape != (1 << n_cogits, 1 << n_cogits):
        raise DimensionError(f"operator shape {m.shape} does not match {n_cogits} cogits")
    p = permutation_matrix(n_cogits, j)
    return UnitaryOperator(p @ m @ p.T)


def apply_dynamics(h, psi) -> DenseState:
    """psi' = H psi for unitary H (checked to 1e-8)."""
    m = _as_array(h)
    v = _as_array(psi).reshape(-1)
    if m.ndim != 2 or m.shape[1] != v.size:
        raise DimensionError(f"operator shape {m.shape} incompatible with state of size {v.size}")
    if not isinstance(h, UnitaryOperator):
        validate_unitary(m, atol=DYNAMICS_ATOL)
    return DenseState(m @ v, normalize=True)


def born_probability(psi, a) -> float:
    """|<a|psi>|^2."""
    v = _as_array(psi).reshape(-1)
    w = _as_array(a).reshape(-1)
    if v.size != w.size:
        raise DimensionError(f"state sizes differ: {v.size} vs {w.size}")
    return float(min(1.0, abs(np.vdot(w, v)) ** 2))


# -- measurement & similarity ----------------------------------------------

def measure(x: CogitHypervector, rng=None, basis: str = "z") -> np.ndarray:
    """One shot per cogit; returns a uint8 bit vector of length n."""
    rng = as_generator(rng)
    return (rng.random(x.n) < x.probabilities(basis)).astype(np.uint8)


def sample_dense(psi, shots: int, rng=None) -> np.ndarray:
    """Basis-state indices drawn with Born probabilities."""
    v = _as_array(psi).reshape(-1)
    p = np.abs(v) ** 2
    return as_generator(rng).choice(v.size, size=shots, p=p / p.sum())


def hamming_similarity(u, v) -> float:
    """1 - Hamming distance / n."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"bit vectors differ in shape: {u.shape} vs {v.shape}")
    return 1.0 - float(np.count_nonzero(u != v)) / u.size


def similarity_matrix(a, b) -> np.ndarray:
    """Pairwise :func:`hamming_similarity` between rows of two bit matrices."""
    return _kernels.hamming_similarity_matrix(a, b)


def cosine_similarity(u, v) -> float:
    """Re<u, v> / (|u| |v|) with the Hermitian inner product."""
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if u.size != v.size:
        raise DimensionError(f"vector lengths differ: {u.size} vs {v.size}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine similarity undefined for a zero vector")
    return float(np.vdot(u, v).real / (nu * nv))


def measured_similarity(x: CogitHypervector, y: CogitHypervector, rng=None,
                        basis: str = "x") -> float:
    """Hamming similarity of independent single-shot measurements of x and y."""
    _check_same_n(x, y)
    rng = as_generator(rng)
    return hamming_similarity(measure(x, rng, basis), measure(y, rng, basis))
