"""Neural-to-cognitive toy models.

Neural activity is a distribution over real m-vectors
(:class:`VectorDistribution`).  A :class:`ReadoutModel` maps it to a
distribution over K cognitive outcomes, represented as a K x K density
matrix; a :class:`DynamicsModel` maps it to unitary cognitive dynamics by
exponentiating a generator that is linear in the neural input.

Every model carries an ODA level tag (``alpha`` population-level, ``beta``
similar-group, ``gamma`` single-individual).  The tag is metadata only.

Monte Carlo predictions draw their base randomness from ``(seed, label)``
streams, so predictions at ``Q`` and at ``Q + noise`` with the same seed
use common random numbers: coordinates the noise leaves untouched produce
bit-identical samples.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.special import gammaln, log_softmax, softmax

from . import _kernels
from .divergence import jsd_classical
from .errors import ConfigError, DimensionError, ValidationError
from .projective import DensityMatrix, UnitaryOperator, _as_array
from .rng import stream

ODA_LEVELS = ("alpha", "beta", "gamma")
READOUT_KINDS = ("constant", "linear-softmax", "subset", "nearest-centroid")
FORMAT_NAME = "cogsec-models"
FORMAT_VERSION = 1


# -- neural distributions ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class VectorDistribution:
    """Gaussian with diagonal covariance, or an empirical sample set."""

    kind: str
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "gaussian-diagonal":
            mean = np.array(self.mean, dtype=float).reshape(-1)
            scale = np.array(self.scale, dtype=float).reshape(-1)
            if mean.size < 1 or mean.shape != scale.shape:
                raise DimensionError("mean and scale must be equal-length, non-empty vectors")
            if np.any(scale < 0):
                raise ValidationError("scales must be nonnegative")
            mean.setflags(write=False)
            scale.setflags(write=False)
            object.__setattr__(self, "mean", mean)
            object.__setattr__(self, "scale", scale)
        elif self.kind == "empirical":
            s = np.array(self.samples, dtype=float)
            if s.ndim == 1:
                s = s[:, None]
            if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
                raise DimensionError("empirical samples must be a non-empty (count, m) array")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        else:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def gaussian(cls, mean, scale) -> "VectorDistribution":
        mean = np.asarray(mean, dtype=float)
        return cls("gaussian-diagonal", mean=mean, scale=np.broadcast_to(scale, mean.shape))

    @classmethod
    def empirical(cls, samples) -> "VectorDistribution":
        return cls("empirical", samples=samples)

    @classmethod
    def zero(cls, dim: int) -> "VectorDistribution":
        return cls.gaussian(np.zeros(dim), np.zeros(dim))

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian-diagonal"

    @property
    def dim(self) -> int:
        return self.mean.size if self.is_gaussian else self.samples.shape[1]

    def expected(self) -> np.ndarray:
        return self.mean.copy() if self.is_gaussian else self.samples.mean(axis=0)

    def sample(self, size: int, rng) -> np.ndarray:
        if self.is_gaussian:
            return self.from_normals(rng.standard_normal((size, self.dim)))
        return self.samples[rng.integers(0, self.samples.shape[0], size)]

    def from_normals(self, z: np.ndarray) -> np.ndarray:
        """Transform standard normals (gaussian kind) into samples."""
        return self.mean + self.scale * z

    def logpdf(self, x) -> np.ndarray:
        if not self.is_gaussian:
            raise ValidationError("pointwise density is only available for the gaussian kind")
        if np.any(self.scale <= 0):
            raise ValidationError("density undefined for zero-scale coordinates")
        return _kernels.diag_gauss_logpdf(x, self.mean, self.scale ** 2)


def shift_distribution(q: VectorDistribution, noise: VectorDistribution,
                       seed: int = 0) -> VectorDistribution:
    """Distribution of X + N for independent X ~ q, N ~ noise.

    Two gaussians combine in closed form.  Otherwise the result is empirical:
    samples are paired through a seeded shuffle (or drawn, for a gaussian
    operand) and summed.
    """
    if q.dim != noise.dim:
        raise DimensionError(f"dimensions differ: {q.dim} vs {noise.dim}")
    if q.is_gaussian and noise.is_gaussian:
        return VectorDistribution.gaussian(q.mean + noise.mean,
                                           np.sqrt(q.scale ** 2 + noise.scale ** 2))
    rng = stream(seed, "shift")
    count = max(d.samples.shape[0] for d in (q, noise) if not d.is_gaussian)

    def draw(d):
        if d.is_gaussian:
            return d.sample(count, rng)
        if d.samples.shape[0] == count:
            return d.samples[rng.permutation(count)]
        return d.samples[rng.integers(0, d.samples.shape[0], count)]

    return VectorDistribution.empirical(draw(q) + draw(noise))


@functools.lru_cache(maxsize=64)
def _base_normals(seed: int, label: str, size: int, dim: int) -> np.ndarray:
    z = stream(seed, label).standard_normal((size, dim))
    z.setflags(write=False)
    return z


def draw_samples(q: VectorDistribution, samples: int, seed: int, label: str = "predict") -> np.ndarray:
    """Seeded samples of q using the shared base stream for (seed, label)."""
    if q.is_gaussian:
        return q.from_normals(_base_normals(int(seed), label, int(samples), q.dim))
    idx = stream(seed, label + "/index").integers(0, q.samples.shape[0], samples)
    return q.samples[idx]


# -- cognitive distributions -------------------------------------------------

@dataclass(frozen=True, eq=False)
class CognitiveDistribution:
    density: DensityMatrix

    def __post_init__(self):
        if self.density.dim < 2:
            raise DimensionError("a cognitive distribution needs K >= 2 outcomes")

    @classmethod
    def from_probs(cls, probs) -> "CognitiveDistribution":
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
            raise ValidationError("outcome probabilities must be nonnegative and sum to 1")
        return cls(DensityMatrix(np.diag(p / p.sum())))

    @property
    def outcome_probs(self) -> np.ndarray:
        p = np.clip(np.real(np.diag(self.density.data)), 0.0, None)
        return p / p.sum()

    @property
    def k(self) -> int:
        return self.density.dim


def trace_distance(a, b) -> float:
    a, b = (x.density if isinstance(x, CognitiveDistribution) else x for x in (a, b))
    d = _as_array(a) - _as_array(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2)).sum())


# -- readout models ------------------------------------------------------------

def _freeze_params(params):
    out = {}
    for k, v in params.items():
        a = np.array(v, dtype=float)
        a.setflags(write=False)
        out[k] = a
    return out


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    """Neural sample -> probabilities over K outcomes.

    kinds and parameters:

    ``constant``          probs (K,)
    ``linear-softmax``    weights (K, m), bias (K,), optional phase (K, m)
    ``subset``            as linear-softmax with weights (K, |subset|)
                          acting on ``feature_subset`` only
    ``nearest-centroid``  centroids (K, m), temperature ()

    A linear-softmax model with ``phase`` weights emits the pure state
    sum_k sqrt(p_k) e^{i (phase x)_k} |k> per sample, so its averaged
    density carries coherences; all other kinds are diagonal.
    """

    name: str
    kind: str
    oda_level: str
    params: dict
    feature_subset: tuple | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in READOUT_KINDS:
            raise ValidationError(f"unknown readout kind {self.kind!r}")
        if self.oda_level not in ODA_LEVELS:
            raise ValidationError(f"oda_level must be one of {ODA_LEVELS}")
        object.__setattr__(self, "params", _freeze_params(self.params))
        if self.feature_subset is not None:
            object.__setattr__(self, "feature_subset", tuple(int(i) for i in self.feature_subset))
        if self.kind == "subset" and not self.feature_subset:
            raise ValidationError("subset readout needs a feature_subset")

    @property
    def n_outcomes(self) -> int:
        key = {"constant": "probs", "nearest-centroid": "centroids"}.get(self.kind, "weights")
        return self.params[key].shape[0]

    @property
    def input_dim(self) -> int | None:
        if self.kind in ("linear-softmax",):
            return self.params["weights"].shape[1]
        if self.kind == "nearest-centroid":
            return self.params["centroids"].shape[1]
        return None

    @property
    def coherent(self) -> bool:
        return "phase" in self.params

    def check_input(self, m: int) -> None:
        need = self.input_dim
        if need is not None and need != m:
            raise DimensionError(f"model {self.name!r} expects m={need}, got {m}")
        if self.feature_subset and max(self.feature_subset) >= m:
            raise DimensionError(f"feature_subset of {self.name!r} exceeds m={m}")

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        p = self.params
        if self.kind == "constant":
            return np.broadcast_to(np.log(np.clip(p["probs"], 1e-300, None)), (x.shape[0], p["probs"].size))
        if self.kind == "linear-softmax":
            return x @ p["weights"].T + p["bias"]
        if self.kind == "subset":
            return x[:, list(self.feature_subset)] @ p["weights"].T + p["bias"]
        d2 = ((x[:, None, :] - p["centroids"][None]) ** 2).sum(axis=2)
        return -d2 / float(p["temperature"])

    def sample_probs(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.broadcast_to(self.params["probs"], (np.atleast_2d(x).shape[0], self.n_outcomes))
        return softmax(self.logits(x), axis=1)

    def predict(self, x) -> np.ndarray:
        """Most probable outcome per sample."""
        return np.argmax(self.logits(np.atleast_2d(x)), axis=1)

    def density_from_samples(self, x: np.ndarray) -> np.ndarray:
        probs = self.sample_probs(x)
        if not self.coherent:
            return np.diag(probs.mean(axis=0)).astype(np.complex128)
        amp = np.sqrt(probs) * np.exp(1j * (np.atleast_2d(x) @ self.params["phase"].T))
        rho = amp.T @ amp.conj() / amp.shape[0]
        return (rho + rho.conj().T) / 2


def constant_readout(name, probs, oda_level="alpha") -> ReadoutModel:
    return ReadoutModel(name, "constant", oda_level, {"probs": np.asarray(probs) / np.sum(probs)})


def linear_softmax_readout(name, weights, bias=None, oda_level="alpha", phase=None) -> ReadoutModel:
    weights = np.asarray(weights, dtype=float)
    params = {"weights": weights,
              "bias": np.zeros(weights.shape[0]) if bias is None else bias}
    if phase is not None:
        params["phase"] = phase
    return ReadoutModel(name, "linear-softmax", oda_level, params)


def subset_readout(name, subset, weights, bias=None, oda_level="alpha") -> ReadoutModel:
    weights = np.asarray(weights, dtype=float)
    if weights.shape[1] != len(subset):
        raise DimensionError("subset weights need one column per subset coordinate")
    return ReadoutModel(name, "subset", oda_level,
                        {"weights": weights,
                         "bias": np.zeros(weights.shape[0]) if bias is None else bias},
                        feature_subset=tuple(subset))


def nearest_centroid_readout(name, centroids, temperature=1.0, oda_level="alpha") -> ReadoutModel:
    return ReadoutModel(name, "nearest-centroid", oda_level,
                        {"centroids": centroids, "temperature": float(temperature)})


def predict_readout(model: ReadoutModel, q: VectorDistribution, samples: int = 1000,
                    seed: int = 0) -> CognitiveDistribution:
    """Monte Carlo average of per-sample predicted densities."""
    model.check_input(q.dim)
    x = draw_samples(q, samples, seed)
    return CognitiveDistribution(DensityMatrix(model.density_from_samples(x)))


def model_dissimilarity(model: ReadoutModel, q: VectorDistribution, q2: VectorDistribution,
                        samples: int = 1000, seed: int = 0) -> float:
    """S: base-2 Jensen-Shannon distance between predicted outcome distributions."""
    a = predict_readout(model, q, samples, seed).outcome_probs
    b = predict_readout(model, q2, samples, seed).outcome_probs
    return jsd_classical(a, b)


# -- dynamics models -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DynamicsModel:
    """G(x) = exp(-i sum_l (w_l . x) H_l) with fixed Hermitian H_l.

    ``weights`` has shape (L, m); ``generators`` (L, D, D).  Every output is
    unitary by construction.
    """

    name: str
    oda_level: str
    weights: np.ndarray
    generators: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.oda_level not in ODA_LEVELS:
            raise ValidationError(f"oda_level must be one of {ODA_LEVELS}")
        w = np.array(self.weights, dtype=float)
        g = np.array(self.generators, dtype=np.complex128)
        if w.ndim != 2 or g.ndim != 3 or g.shape[0] != w.shape[0] or g.shape[1] != g.shape[2]:
            raise DimensionError("weights (L, m) and generators (L, D, D) disagree")
        if np.max(np.abs(g - g.conj().transpose(0, 2, 1)), initial=0.0) > 1e-12:
            raise ValidationError("generators must be Hermitian")
        w.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    def check_input(self, m: int) -> None:
        if m != self.input_dim:
            raise DimensionError(f"model {self.name!r} expects m={self.input_dim}, got {m}")

    def generator(self, x) -> np.ndarray:
        """Hermitian generator(s) for input row(s) x: shape (S, D, D)."""
        coeff = np.atleast_2d(x) @ self.weights.T
        return np.einsum("sl,lij->sij", coeff, self.generators)

    def unitaries(self, x) -> np.ndarray:
        return _expm_hermitian(self.generator(x))


def _expm_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(-i h) for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(h)
    return np.einsum("sij,sj,skj->sik", v, np.exp(-1j * w), v.conj())


def random_hermitian_basis(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` seeded Hermitian matrices with unit operator norm."""
    rng = stream(seed, "hermitian-basis")
    out = np.empty((count, dim, dim), dtype=np.complex128)
    for i in range(count):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = (a + a.conj().T) / 2
        out[i] = h / np.linalg.norm(h, 2)
    return out


def rotation_dynamics(name: str, weights, dim: int, seed: int = 0, oda_level: str = "alpha",
                      generators=None) -> DynamicsModel:
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if generators is None:
        generators = random_hermitian_basis(dim, weights.shape[0], seed)
    return DynamicsModel(name, oda_level, weights, generators)


def predict_dynamics(model: DynamicsModel, q: VectorDistribution, samples: int = 1000,
                     seed: int = 0) -> UnitaryOperator:
    """Unitary generated by the sample-mean generator."""
    model.check_input(q.dim)
    x = draw_samples(q, samples, seed)
    h = model.generator(x).mean(axis=0)
    return UnitaryOperator(_expm_hermitian(h[None])[0])


def sample_unitaries(model: DynamicsModel, q: VectorDistribution, samples: int,
                     seed: int) -> np.ndarray:
    model.check_input(q.dim)
    return model.unitaries(draw_samples(q, samples, seed))


def operator_norm(a) -> np.ndarray | float:
    """Largest singular value (stacked input supported)."""
    a = np.asarray(a)
    if a.ndim == 2:
        return float(np.linalg.norm(a, 2))
    return np.linalg.svd(a, compute_uv=False)[..., 0]


def choi_state(unitaries: np.ndarray) -> np.ndarray:
    """Density matrix of the channel-state embedding of a unitary ensemble.

    Each U contributes |U> = (I (x) U)|Omega>, |Omega> = sum_i |ii>/sqrt(D);
    the ensemble maps to the uniform mixture of those pure states.
    """
    u = np.asarray(unitaries)
    if u.ndim == 2:
        u = u[None]
    s, d, _ = u.shape
    vecs = u.transpose(0, 2, 1).reshape(s, d * d) / math.sqrt(d)
    rho = vecs.T @ vecs.conj() / s
    return (rho + rho.conj().T) / 2


# -- hypothesis classes --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HypothesisClass:
    members: tuple
    name: str = ""
    empty: bool = False

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members and not self.empty:
            raise ValidationError("hypothesis class must be non-empty (or flagged empty)")
        kinds = {type(m) for m in members}
        if len(kinds) > 1:
            raise ValidationError("hypothesis class members must all be readouts or all dynamics")

    @property
    def kind(self) -> str | None:
        if not self.members:
            return None
        return "readout" if isinstance(self.members[0], ReadoutModel) else "dynamics"

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# -- fitting -------------------------------------------------------------------

def fit_readout(kind: str, x, y, oda_level: str = "alpha", n_outcomes: int | None = None,
                name: str | None = None, feature_subset=None, l2: float = 1e-4,
                seed: int = 0) -> ReadoutModel:
    """Fit a toy readout to labelled neural samples.

    ``linear-softmax``/``subset``: L2-regularized multinomial logistic
    regression by L-BFGS from a zero start (deterministic).
    ``nearest-centroid``: class means, temperature = mean within-class
    squared distance.  Training accuracy lands in ``model.info``.  A dataset
    with one class yields a constant model flagged ``single-class``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=int).reshape(-1)
    if x.shape[0] == 0 or y.size == 0:
        raise ValueError("empty dataset")
    if x.shape[0] != y.size:
        raise DimensionError("x and y have different sample counts")
    k = int(n_outcomes if n_outcomes is not None else y.max() + 1)
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    name = name or f"{kind}-fit"
    present = np.unique(y)
    if present.size == 1:
        probs = np.full(k, 1e-6)
        probs[present[0]] = 1.0
        warnings.warn("single-class dataset: fitted a constant readout", stacklevel=2)
        model = ReadoutModel(name, "constant", oda_level, {"probs": probs / probs.sum()},
                             info={"training_accuracy": 1.0, "flags": ["single-class"]})
        return model

    if kind == "nearest-centroid":
        cents = np.stack([x[y == c].mean(axis=0) if np.any(y == c) else np.full(x.shape[1], np.inf)
                          for c in range(k)])
        cents = np.where(np.isfinite(cents), cents, 1e6)
        within = np.mean(((x - cents[y]) ** 2).sum(axis=1))
        model = nearest_centroid_readout(name, cents, max(within, 1e-6), oda_level)
    elif kind in ("linear-softmax", "subset"):
        cols = list(feature_subset) if kind == "subset" else list(range(x.shape[1]))
        xs = x[:, cols]
        w, b = _fit_softmax(xs, y, k, l2)
        if kind == "subset":
            model = subset_readout(name, cols, w, b, oda_level)
        else:
            model = linear_softmax_readout(name, w, b, oda_level)
    else:
        raise ValueError(f"cannot fit readout kind {kind!r}")
    acc = float(np.mean(model.predict(x) == y))
    return ReadoutModel(model.name, model.kind, model.oda_level, dict(model.params),
                        model.feature_subset, info={"training_accuracy": acc, "flags": []})


def _fit_softmax(x, y, k, l2):
    n, m = x.shape
    onehot = np.eye(k)[y]

    def loss(theta):
        w = theta[: k * m].reshape(k, m)
        b = theta[k * m:]
        z = x @ w.T + b
        lsm = log_softmax(z, axis=1)
        val = -np.sum(onehot * lsm) / n + l2 * np.sum(w * w)
        g = (np.exp(lsm) - onehot) / n
        gw = g.T @ x + 2 * l2 * w
        gb = g.sum(axis=0)
        return val, np.concatenate([gw.ravel(), gb])

    res = minimize(loss, np.zeros(k * m + k), jac=True, method="L-BFGS-B",
                   options={"maxiter": 2000, "gtol": 1e-10})
    return res.x[: k * m].reshape(k, m), res.x[k * m:]


# -- knn density proxy (empirical distributions) -------------------------------

def knn_logdensity(points: np.ndarray, reference: np.ndarray, k: int = 5,
                   exclude_self: bool = False) -> np.ndarray:
    """k-nearest-neighbour log-density estimate of ``reference`` at ``points``."""
    n, m = reference.shape
    tree = cKDTree(reference)
    kk = k + 1 if exclude_self else k
    dist, _ = tree.query(points, k=kk)
    r = np.maximum(np.atleast_2d(dist.T).T[:, -1] if dist.ndim > 1 else dist, 1e-300)
    log_unit_ball = (m / 2) * math.log(math.pi) - gammaln(m / 2 + 1)
    count = n - 1 if exclude_self else n
    return math.log(k) - math.log(count) - log_unit_ball - m * np.log(r)


# -- serialization -------------------------------------------------------------

def _encode_array(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"real": a.real.tolist(), "imag": a.imag.tolist()}
    return a.tolist()


def _decode_array(v, dtype=float):
    if isinstance(v, dict):
        return np.array(v["real"], dtype=float) + 1j * np.array(v["imag"], dtype=float)
    return np.array(v, dtype=dtype)


def model_to_dict(model) -> dict:
    if isinstance(model, ReadoutModel):
        return {"type": "readout", "name": model.name, "kind": model.kind,
                "oda_level": model.oda_level,
                "params": {k: _encode_array(v) for k, v in model.params.items()},
                "feature_subset": list(model.feature_subset) if model.feature_subset else None,
                "info": model.info}
    if isinstance(model, DynamicsModel):
        return {"type": "dynamics", "name": model.name, "oda_level": model.oda_level,
                "weights": _encode_array(model.weights),
                "generators": _encode_array(model.generators), "info": model.info}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    t = d.get("type")
    if t == "readout":
        return ReadoutModel(d["name"], d["kind"], d["oda_level"],
                            {k: _decode_array(v) for k, v in d["params"].items()},
                            d.get("feature_subset"), info=d.get("info", {}))
    if t == "dynamics":
        return DynamicsModel(d["name"], d["oda_level"], _decode_array(d["weights"]),
                             _decode_array(d["generators"]), info=d.get("info", {}))
    raise ConfigError("unknown model record", [f"type={t!r}"])


def dumps_models(models) -> str:
    return json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION,
                       "models": [model_to_dict(m) for m in models]}, indent=2)


def loads_models(text: str) -> list:
    doc = json.loads(text)
    problems = []
    if doc.get("format") != FORMAT_NAME:
        problems.append(f"format must be {FORMAT_NAME!r}")
    if doc.get("version") != FORMAT_VERSION:
        problems.append(f"unsupported version {doc.get('version')!r}")
    if problems:
        raise ConfigError("invalid model file", problems)
    return [model_from_dict(m) for m in doc["models"]]
