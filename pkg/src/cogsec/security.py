"""Defensive-noise and alteration objectives with black-box optimizers.

Six objectives share one shape, ``term - lam * penalty``:

=======  ==========================================  ==========================
variant  term                                        penalty
=======  ==========================================  ==========================
SMON     min_F S(F(Q), F(Q+N))                       qjsd(T(Q+N), T(Q))
DMON     min_G 1/2 E||G(x) - G(x')||                 qjsd(T(Q+N), T(Q))
SION     JS distance(Q, Q+N) on neural space         qjsd(T(Q+N), T(Q))
DION     JS distance(Q, Q+N)                         qjsd of Choi states of T
SMOA     min_F 1 - JS distance(F(Q+N), B)            JS distance(Q, Q+N)
DMOA     min_G 1 - 1/2 ||G(Q+N) - Phi||              JS distance(Q, Q+N)
=======  ==========================================  ==========================

Defense variants carry a constraint (term >= mu; DMON compares the
un-halved norm with mu).  Attack variants are unconstrained.  Every
evaluation is deterministic given the spec seed: Q and Q+N are sampled from
the same base normals, so paired samples differ only through the noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .divergence import jsd_classical, qjsd
from .errors import ConfigError, DimensionError, ValidationError
from .models import (
    CognitiveDistribution,
    DynamicsModel,
    HypothesisClass,
    ReadoutModel,
    VectorDistribution,
    choi_state,
    knn_logdensity,
    operator_norm,
    predict_dynamics,
    predict_readout,
    sample_unitaries,
    shift_distribution,
)
from .projective import UnitaryOperator
from .rng import stream

VARIANTS = ("SMON", "DMON", "SION", "DION", "SMOA", "DMOA")
DEFENSE_VARIANTS = ("SMON", "DMON", "SION", "DION")
MIN_JSD_SAMPLES = 100
LN2 = math.log(2.0)


# -- neural-space divergence ---------------------------------------------------

def _normals(seed, label, size, dim):
    return stream(seed, label).standard_normal((size, dim))


def jsd_estimate(p: VectorDistribution, r: VectorDistribution, samples: int = 4000,
                 seed: int = 0, k: int | None = None) -> float:
    """Base-2 Jensen-Shannon distance between two neural distributions.

    Gaussian pairs: Monte Carlo over exact log densities, with the
    closed-form KL term as a control variate.  Coordinates whose
    parameters coincide are dropped first; for product distributions they
    contribute nothing.  Any empirical operand switches to a k-nearest-
    neighbour density proxy with ``k`` defaulting to sqrt(samples); a small
    k leaves enough log-ratio noise for the concave log-sum to bias the
    distance low.
    """
    if samples < MIN_JSD_SAMPLES:
        raise ConfigError("divergence estimator misconfigured",
                          [f"samples must be >= {MIN_JSD_SAMPLES}, got {samples}"])
    if p.dim != r.dim:
        raise DimensionError(f"dimensions differ: {p.dim} vs {r.dim}")
    if p.is_gaussian and r.is_gaussian:
        return _jsd_gaussian(p, r, samples, seed)
    return _jsd_knn(p, r, samples, seed, k or max(5, int(math.sqrt(samples))))


def _kl_diag_gauss(am, as_, bm, bs):
    return float(np.sum(np.log(bs / as_) + (as_ ** 2 + (am - bm) ** 2) / (2 * bs ** 2) - 0.5))


def _jsd_gaussian(p, r, samples, seed):
    differ = (p.mean != r.mean) | (p.scale != r.scale)
    if not np.any(differ):
        return 0.0
    pm, ps = p.mean[differ], p.scale[differ]
    rm, rs = r.mean[differ], r.scale[differ]
    if np.any((ps == 0) | (rs == 0)):
        # a point mass against anything different is mutually singular
        return 1.0
    p_ = VectorDistribution.gaussian(pm, ps)
    r_ = VectorDistribution.gaussian(rm, rs)
    xp = p_.from_normals(_normals(seed, "jsd/p", samples, pm.size))
    xr = r_.from_normals(_normals(seed, "jsd/r", samples, pm.size))
    lp_p, lr_p = p_.logpdf(xp), r_.logpdf(xp)
    lp_r, lr_r = p_.logpdf(xr), r_.logpdf(xr)
    # log(p/m) = l/2 - g(l) with l = log(p/r) and E_p[l] = KL(p||r) in closed form;
    # averaging only the remainder keeps the relative error bounded for close pairs
    l_p = lp_p - lr_p
    l_r = lr_r - lp_r
    rem_p = LN2 - np.logaddexp(0.0, -l_p) - 0.5 * l_p
    rem_r = LN2 - np.logaddexp(0.0, -l_r) - 0.5 * l_r
    div = (0.5 * (0.5 * _kl_diag_gauss(pm, ps, rm, rs) + np.mean(rem_p))
           + 0.5 * (0.5 * _kl_diag_gauss(rm, rs, pm, ps) + np.mean(rem_r)))
    return float(math.sqrt(min(max(div / LN2, 0.0), 1.0)))


def _draw_points(d, samples, rng):
    # empirical operands are subsampled without replacement: a repeated point
    # would sit at zero distance from its copy and wreck the k-NN density
    if not d.is_gaussian and samples <= d.samples.shape[0]:
        return d.samples[rng.permutation(d.samples.shape[0])[:samples]]
    return d.sample(samples, rng)


def _jsd_knn(p, r, samples, seed, k):
    xp = _draw_points(p, samples, stream(seed, "jsd/p"))
    xr = _draw_points(r, samples, stream(seed, "jsd/r"))
    return _jsd_from_logdensities(knn_logdensity(xp, xp, k, exclude_self=True),
                                  knn_logdensity(xp, xr, k),
                                  knn_logdensity(xr, xp, k),
                                  knn_logdensity(xr, xr, k, exclude_self=True))


def _jsd_from_logdensities(lp_p, lr_p, lp_r, lr_r) -> float:
    """JS distance from log densities of both operands at samples of each.

    log(p/m) = ln 2 - log(1 + r/p), averaged under p, and symmetrically for r.
    """
    div = 0.5 * np.mean(LN2 - np.logaddexp(0.0, lr_p - lp_p)) \
        + 0.5 * np.mean(LN2 - np.logaddexp(0.0, lp_r - lr_r))
    return float(math.sqrt(min(max(div / LN2, 0.0), 1.0)))


# -- noise parameterization ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class NoiseParameterization:
    """Gaussian noise N(mean, diag(scale^2)); ``sparse-support`` zeroes all
    coordinates outside ``support``."""

    kind: str
    mean: np.ndarray
    scale: np.ndarray
    support: tuple | None = None

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        scale = np.array(self.scale, dtype=float).reshape(-1)
        if mean.shape != scale.shape:
            raise DimensionError("mean and scale must have equal length")
        if np.any(scale < 0):
            raise ValidationError("noise scales must be nonnegative")
        if self.kind not in ("gaussian-diagonal", "sparse-support"):
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if self.support is not None:
            support = tuple(int(i) for i in self.support)
            if any(i < 0 or i >= mean.size for i in support):
                raise ValidationError("support indices must lie within m")
            object.__setattr__(self, "support", support)
            outside = np.ones(mean.size, bool)
            outside[list(support)] = False
            if np.any(mean[outside] != 0) or np.any(scale[outside] != 0):
                raise ValidationError("sparse noise must vanish outside its support")
        mean.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def zero(cls, dim: int) -> "NoiseParameterization":
        return cls("gaussian-diagonal", np.zeros(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.mean.size

    def distribution(self) -> VectorDistribution:
        return VectorDistribution.gaussian(self.mean, self.scale)

    def coordinate_energy(self) -> np.ndarray:
        """Per-coordinate second moment mean^2 + scale^2."""
        return self.mean ** 2 + self.scale ** 2

    def energy(self) -> float:
        return float(self.coordinate_energy().sum())

    def energy_fraction(self, indices) -> float:
        e = self.coordinate_energy()
        total = e.sum()
        return float(e[list(indices)].sum() / total) if total > 0 else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "support": list(self.support) if self.support is not None else None}


@dataclass(frozen=True)
class NoiseSpace:
    """Box-bounded search space over noise means and/or scales."""

    dim: int
    support: tuple | None = None
    optimize_mean: bool = True
    optimize_scale: bool = True
    mean_bound: float = 3.0
    scale_bound: float = 3.0

    @property
    def coords(self) -> list[int]:
        return list(range(self.dim)) if self.support is None else [int(i) for i in self.support]

    @property
    def n_params(self) -> int:
        return len(self.coords) * (int(self.optimize_mean) + int(self.optimize_scale))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = len(self.coords)
        lo, hi = [], []
        if self.optimize_mean:
            lo.append(np.full(c, -self.mean_bound))
            hi.append(np.full(c, self.mean_bound))
        if self.optimize_scale:
            lo.append(np.zeros(c))
            hi.append(np.full(c, self.scale_bound))
        return np.concatenate(lo), np.concatenate(hi)

    def clip(self, theta):
        lo, hi = self.bounds()
        return np.clip(theta, lo, hi)

    def decode(self, theta) -> NoiseParameterization:
        theta = self.clip(np.asarray(theta, dtype=float))
        c = len(self.coords)
        mean = np.zeros(self.dim)
        scale = np.zeros(self.dim)
        off = 0
        if self.optimize_mean:
            mean[self.coords] = theta[:c]
            off = c
        if self.optimize_scale:
            scale[self.coords] = theta[off:off + c]
        kind = "gaussian-diagonal" if self.support is None else "sparse-support"
        return NoiseParameterization(kind, mean, scale, self.support)

    def encode(self, noise: NoiseParameterization) -> np.ndarray:
        parts = []
        if self.optimize_mean:
            parts.append(noise.mean[self.coords])
        if self.optimize_scale:
            parts.append(noise.scale[self.coords])
        return self.clip(np.concatenate(parts))


# -- objective specification ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    variant: str
    baseline: VectorDistribution | tuple
    lam: float = 0.0
    mu: float = 0.0
    hypothesis_class: HypothesisClass | None = None
    ground_truth: ReadoutModel | DynamicsModel | None = None
    target: CognitiveDistribution | UnitaryOperator | None = None
    mc_samples: int = 1000
    jsd_samples: int = 4000
    seed: int = 0
    orientation: str = "closeness"
    aggregate: str = "mean"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.baseline, VectorDistribution):
            object.__setattr__(self, "baseline", (self.baseline,))
        else:
            object.__setattr__(self, "baseline", tuple(self.baseline))
        errs = self.violations()
        if errs:
            raise ConfigError(f"invalid {self.variant} objective", errs)

    def violations(self) -> list[str]:
        v = self.variant
        errs = []
        if v not in VARIANTS:
            return [f"variant must be one of {VARIANTS}, got {v!r}"]
        if not self.baseline:
            errs.append("baseline distribution list is empty")
        elif len({q.dim for q in self.baseline}) > 1:
            errs.append("baseline distributions have different dimensions")
        if not self.lam >= 0:
            errs.append(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.mu <= 1.0:
            errs.append(f"mu must lie in [0, 1], got {self.mu}")
        if self.mc_samples < 1:
            errs.append("mc_samples must be >= 1")
        if self.jsd_samples < MIN_JSD_SAMPLES and v in ("SION", "DION", "SMOA", "DMOA"):
            errs.append(f"jsd_samples must be >= {MIN_JSD_SAMPLES}, got {self.jsd_samples}")
        if self.orientation not in ("closeness", "distance"):
            errs.append("orientation must be 'closeness' or 'distance'")
        if self.aggregate not in ("mean", "worst"):
            errs.append("aggregate must be 'mean' or 'worst'")
        needs_class = {"SMON": "readout", "DMON": "dynamics", "SMOA": "readout", "DMOA": "dynamics"}
        if v in needs_class:
            hc = self.hypothesis_class
            if hc is None or not len(hc):
                errs.append(f"{v} needs a non-empty hypothesis class")
            elif hc.kind != needs_class[v]:
                errs.append(f"{v} needs {needs_class[v]} models in its hypothesis class")
        if v in ("SMON", "DMON", "SION") and not isinstance(self.ground_truth, ReadoutModel):
            errs.append(f"{v} needs a readout ground-truth channel")
        if v == "DION" and not isinstance(self.ground_truth, DynamicsModel):
            errs.append("DION needs a dynamics ground-truth channel")
        if v == "SMOA" and not isinstance(self.target, CognitiveDistribution):
            errs.append("SMOA needs a target cognitive distribution")
        if v == "DMOA" and not isinstance(self.target, UnitaryOperator):
            errs.append("DMOA needs a target unitary operator")
        return errs

    @property
    def dim(self) -> int:
        return self.baseline[0].dim

    @property
    def constrained(self) -> bool:
        return self.variant in DEFENSE_VARIANTS


class ObjectiveValue(NamedTuple):
    objective: float
    term: float
    penalty: float


@dataclass(frozen=True)
class Evaluation:
    objective: float
    term: float
    penalty: float
    feasible: bool
    slack: float


# -- evaluators ----------------------------------------------------------------

def _as_noise(aleph, dim) -> VectorDistribution:
    if isinstance(aleph, NoiseParameterization):
        aleph = aleph.distribution()
    if not isinstance(aleph, VectorDistribution):
        raise TypeError("noise must be a NoiseParameterization or VectorDistribution")
    if aleph.dim != dim:
        raise DimensionError(f"noise dimension {aleph.dim} does not match m={dim}")
    return aleph


def _cached(spec, key, fn):
    if key not in spec._cache:
        spec._cache[key] = fn()
    return spec._cache[key]


def _readout_probs(spec, model, q, tag):
    def run():
        return predict_readout(model, q, spec.mc_samples, spec.seed).outcome_probs
    return run() if tag is None else _cached(spec, ("probs", id(model), tag), run)


def _readout_penalty(spec, q, qn, qi):
    t = spec.ground_truth
    a = _cached(spec, ("density", qi),
                lambda: predict_readout(t, q, spec.mc_samples, spec.seed).density.data)
    b = predict_readout(t, qn, spec.mc_samples, spec.seed).density.data
    return qjsd(b, a, validate=False)


def _choi_penalty(spec, q, qn, qi):
    t = spec.ground_truth
    a = _cached(spec, ("choi", qi),
                lambda: choi_state(sample_unitaries(t, q, spec.mc_samples, spec.seed)))
    b = choi_state(sample_unitaries(t, qn, spec.mc_samples, spec.seed))
    return qjsd(b, a, validate=False)


def _min_dissimilarity(spec, q, qn, qi):
    vals = [jsd_classical(_readout_probs(spec, f, q, qi), _readout_probs(spec, f, qn, None))
            for f in spec.hypothesis_class]
    return min(vals)


def _min_half_opdiff(spec, q, qn, qi):
    vals = []
    for g in spec.hypothesis_class:
        u = _cached(spec, ("unitaries", id(g), qi),
                    lambda g=g: sample_unitaries(g, q, spec.mc_samples, spec.seed))
        un = sample_unitaries(g, qn, spec.mc_samples, spec.seed)
        vals.append(0.5 * float(np.mean(operator_norm(u - un))))
    return min(vals)


def _attainment_readout(spec, qn):
    b = spec.target.outcome_probs
    return min(1.0 - jsd_classical(_readout_probs(spec, f, qn, None), b)
               for f in spec.hypothesis_class)


def _attainment_dynamics(spec, qn):
    phi = spec.target.data
    vals = []
    for g in spec.hypothesis_class:
        half = 0.5 * operator_norm(predict_dynamics(g, qn, spec.mc_samples, spec.seed).data - phi)
        vals.append(1.0 - half if spec.orientation == "closeness" else half)
    return min(vals)


def _single(spec, noise, q, qi) -> ObjectiveValue:
    qn = shift_distribution(q, noise, spec.seed)
    v = spec.variant
    if v == "SMON":
        term, pen = _min_dissimilarity(spec, q, qn, qi), _readout_penalty(spec, q, qn, qi)
    elif v == "DMON":
        term, pen = _min_half_opdiff(spec, q, qn, qi), _readout_penalty(spec, q, qn, qi)
    elif v == "SION":
        term = jsd_estimate(q, qn, spec.jsd_samples, spec.seed)
        pen = _readout_penalty(spec, q, qn, qi)
    elif v == "DION":
        term = jsd_estimate(q, qn, spec.jsd_samples, spec.seed)
        pen = _choi_penalty(spec, q, qn, qi)
    elif v == "SMOA":
        term = _attainment_readout(spec, qn)
        pen = jsd_estimate(q, qn, spec.jsd_samples, spec.seed)
    else:
        term = _attainment_dynamics(spec, qn)
        pen = jsd_estimate(q, qn, spec.jsd_samples, spec.seed)
    return ObjectiveValue(term - spec.lam * pen, float(term), float(pen))


def objective_value(aleph, spec: ObjectiveSpec) -> ObjectiveValue:
    """(objective, term, penalty), aggregated over the baseline list."""
    noise = _as_noise(aleph, spec.dim)
    vals = [_single(spec, noise, q, i) for i, q in enumerate(spec.baseline)]
    if len(vals) == 1:
        return vals[0]
    if spec.aggregate == "worst":
        return min(vals, key=lambda t: t.objective)
    term = float(np.mean([t.term for t in vals]))
    pen = float(np.mean([t.penalty for t in vals]))
    return ObjectiveValue(term - spec.lam * pen, term, pen)


def _checked(variant):
    def ev(aleph, spec: ObjectiveSpec) -> ObjectiveValue:
        if spec.variant != variant:
            raise ValidationError(f"spec variant is {spec.variant}, expected {variant}")
        return objective_value(aleph, spec)
    ev.__name__ = f"eval_{variant.lower()}"
    ev.__doc__ = f"Evaluate the {variant} objective: (objective, term, penalty)."
    return ev


eval_smon = _checked("SMON")
eval_dmon = _checked("DMON")
eval_sion = _checked("SION")
eval_dion = _checked("DION")
eval_smoa = _checked("SMOA")
eval_dmoa = _checked("DMOA")


def constraint_slack(term: float, spec: ObjectiveSpec) -> float:
    """Positive or zero when feasible.  DMON's mu bounds the un-halved norm."""
    if not spec.constrained:
        return 0.0
    scale = 2.0 if spec.variant == "DMON" else 1.0
    return scale * term - spec.mu


def evaluate(aleph, spec: ObjectiveSpec) -> Evaluation:
    val = objective_value(aleph, spec)
    slack = constraint_slack(val.term, spec)
    return Evaluation(val.objective, val.term, val.penalty, slack >= 0, slack)


# -- optimizers ----------------------------------------------------------------

STRATEGIES = ("random", "es", "fd")


@dataclass(frozen=True)
class OptimizerConfig:
    strategy: str = "es"
    budget: int = 2000
    step: float = 0.3
    seed: int = 0
    mutation_fraction: float = 1.0
    fd_eps: float = 1e-3
    penalty: float = 1.0

    def __post_init__(self):
        errs = []
        if self.strategy not in STRATEGIES:
            errs.append(f"strategy must be one of {STRATEGIES}")
        if self.budget < 1:
            errs.append("budget must be >= 1 evaluation")
        if not self.step > 0:
            errs.append("step must be > 0")
        if not 0 < self.mutation_fraction <= 1:
            errs.append("mutation_fraction must lie in (0, 1]")
        if not self.fd_eps > 0:
            errs.append("fd_eps must be > 0")
        if not self.penalty > 0:
            errs.append("penalty must be > 0")
        if errs:
            raise ConfigError("invalid optimizer configuration", errs)


@dataclass
class OptimizationResult:
    best_noise: NoiseParameterization
    objective_value: float
    constraint_satisfied: bool
    trace: list
    evaluations: int
    seed: int
    best_evaluation: Evaluation
    min_feasible_energy: float | None = None

    def summary(self) -> dict:
        return {"objective_value": self.objective_value,
                "constraint_satisfied": self.constraint_satisfied,
                "term": self.best_evaluation.term, "penalty": self.best_evaluation.penalty,
                "slack": self.best_evaluation.slack, "evaluations": self.evaluations,
                "seed": self.seed, "noise_energy": self.best_noise.energy(),
                "min_feasible_energy": self.min_feasible_energy}


def _penalized(ev: Evaluation, rho: float) -> float:
    return ev.objective - rho * max(0.0, -ev.slack)


def _better(a: Evaluation, b: Evaluation, rho: float = 1.0) -> bool:
    """Feasibility-first comparison.  Feasible beats infeasible; feasible
    points rank by objective, infeasible ones by objective - rho * violation,
    so the penalty term keeps acting before the constraint is met."""
    if a.feasible != b.feasible:
        return a.feasible
    if a.feasible:
        return a.objective > b.objective
    return _penalized(a, rho) > _penalized(b, rho)


class _Tracker:
    def __init__(self, fn, space, budget, rho):
        self.fn, self.space, self.budget, self.rho = fn, space, budget, rho
        self.trace = []
        self.best = None
        self.min_feasible_energy = None

    @property
    def left(self):
        return self.budget - len(self.trace)

    def __call__(self, theta):
        noise = self.space.decode(theta)
        ev = self.fn(noise)
        self.trace.append((len(self.trace), float(ev.objective), float(ev.slack)))
        if self.best is None or _better(ev, self.best[1], self.rho):
            self.best = (noise, ev)
        if ev.feasible:
            e = noise.energy()
            if self.min_feasible_energy is None or e < self.min_feasible_energy:
                self.min_feasible_energy = e
        return ev


def optimize(spec, space: NoiseSpace, config: OptimizerConfig = OptimizerConfig(),
             start: NoiseParameterization | None = None) -> OptimizationResult:
    """Maximize an objective over the noise space within ``config.budget`` evaluations.

    ``spec`` is an :class:`ObjectiveSpec` or a callable mapping a
    :class:`NoiseParameterization` to an :class:`Evaluation` (or a float,
    read as an unconstrained objective).  The search starts from zero noise
    unless ``start`` is given.
    """
    if space.n_params == 0:
        raise ValidationError("empty parameter space")
    if isinstance(spec, ObjectiveSpec):
        if spec.dim != space.dim:
            raise DimensionError(f"noise space m={space.dim} differs from spec m={spec.dim}")
        fn: Callable = lambda noise: evaluate(noise, spec)
    else:
        def fn(noise, _f=spec):
            out = _f(noise)
            if isinstance(out, Evaluation):
                return out
            return Evaluation(float(out), float(out), 0.0, True, 0.0)
    track = _Tracker(fn, space, config.budget, config.penalty)
    theta0 = space.encode(start) if start is not None else space.clip(np.zeros(space.n_params))
    rng = stream(config.seed, "optimizer/" + config.strategy)
    {"random": _random_search, "es": _one_plus_one_es, "fd": _finite_difference}[config.strategy](
        track, theta0, rng, config)
    noise, ev = track.best
    return OptimizationResult(noise, float(ev.objective), bool(ev.feasible), track.trace,
                              len(track.trace), config.seed, ev, track.min_feasible_energy)


def _random_search(track, theta0, rng, config):
    lo, hi = track.space.bounds()
    track(theta0)
    while track.left > 0:
        track(lo + (hi - lo) * rng.random(lo.size))


def _one_plus_one_es(track, theta0, rng, config):
    space = track.space
    parent = theta0
    parent_ev = track(parent)
    sigma = config.step
    lo, hi = space.bounds()
    d = parent.size
    while track.left > 0:
        mask = rng.random(d) < config.mutation_fraction
        if not mask.any():
            mask[rng.integers(d)] = True
        child = space.clip(parent + sigma * rng.standard_normal(d) * mask)
        ev = track(child)
        if _better(ev, parent_ev, config.penalty):
            parent, parent_ev = child, ev
            sigma *= math.exp(1.0 / 3.0)
        else:
            # 1/5 success rule: success x1/3 balances failure x1/12 at rate 1/5
            sigma *= math.exp(-1.0 / 12.0)
        sigma = min(max(sigma, 1e-9), float(np.max(hi - lo)))


def _finite_difference(track, theta0, rng, config):
    space = track.space
    rho = config.penalty
    eps = config.fd_eps
    step = config.step

    def fitness(ev):
        return _penalized(ev, rho)

    theta = theta0
    cur = track(theta)
    while track.left > theta.size:
        grad = np.zeros(theta.size)
        for i in range(theta.size):
            t = theta.copy()
            t[i] += eps
            t = space.clip(t)
            h = t[i] - theta[i]
            if h == 0:
                t[i] = theta[i] - eps
                t = space.clip(t)
                h = t[i] - theta[i]
            grad[i] = (fitness(track(t)) - fitness(cur)) / h if h != 0 else 0.0
        norm = float(np.linalg.norm(grad))
        if track.left == 0:
            break
        if norm == 0.0:
            # flat at this resolution (Monte Carlo terms clip at zero): widen the difference
            eps *= 10.0
            if eps > float(np.max(space.bounds()[1] - space.bounds()[0])):
                break
            continue
        cand = space.clip(theta + step * grad / norm)
        ev = track(cand)
        if not ev.feasible:
            rho *= 2.0
        if fitness(ev) >= fitness(cur):
            theta, cur = cand, ev
            step *= 1.2
        else:
            step *= 0.5
        if step < 1e-12:
            break


# -- model-aware ensemble ------------------------------------------------------

def class_dissimilarity(hc: HypothesisClass, q: VectorDistribution, aleph, samples: int = 1000,
                        seed: int = 0) -> float:
    """Minimum over members of S (readouts) or E||G(x) - G(x')|| (dynamics)."""
    noise = _as_noise(aleph, q.dim)
    qn = shift_distribution(q, noise, seed)
    vals = []
    for m in hc:
        if isinstance(m, ReadoutModel):
            a = predict_readout(m, q, samples, seed).outcome_probs
            b = predict_readout(m, qn, samples, seed).outcome_probs
            vals.append(jsd_classical(a, b))
        else:
            diff = sample_unitaries(m, q, samples, seed) - sample_unitaries(m, qn, samples, seed)
            vals.append(float(np.mean(operator_norm(diff))))
    return min(vals) if vals else 0.0


def ensemble_defender_class(candidates, q: VectorDistribution, aleph, mu: float,
                            samples: int = 1000, seed: int = 0) -> HypothesisClass:
    """Union of the members of every candidate class whose worst-case
    dissimilarity under the noise reaches ``mu``."""
    candidates = list(candidates)
    if not candidates:
        raise ValidationError("need at least one candidate class")
    members, seen = [], set()
    for hc in candidates:
        if len(hc) and class_dissimilarity(hc, q, aleph, samples, seed) >= mu:
            for m in hc:
                if id(m) not in seen:
                    seen.add(id(m))
                    members.append(m)
    return HypothesisClass(tuple(members), name="ensemble", empty=not members)


__all__ = [
    "Evaluation", "NoiseParameterization", "NoiseSpace", "ObjectiveSpec", "ObjectiveValue",
    "OptimizationResult", "OptimizerConfig", "class_dissimilarity", "constraint_slack",
    "ensemble_defender_class", "eval_dion", "eval_dmoa", "eval_dmon",
    "eval_smoa", "eval_smon", "eval_sion", "evaluate", "jsd_estimate", "objective_value",
    "optimize",
]
