"""Shipped demonstration scenarios for the defense and attack objectives.

Each builder derives everything from ``(seed, label)`` streams, so a seed
fully determines the simulated subject and the model rosters.

Subset defense
    m neural coordinates with baseline Q = N(mu, I).  The subject's true
    cognition T is a calibrated two-outcome linear-softmax over all
    coordinates.  Attackers are subset readouts over the first few
    coordinates, each calibrated to read outcome 0 with a margin at mu.
    Noise is zero-mean with searchable scales.  With two outcomes T depends
    on the noise only through one logit variance, so variance placed on one
    coordinate can never offset variance placed on another.

Readout attack
    A sharp two-outcome linear-softmax attacker whose baseline prediction
    has a set confidence; the target swaps the top two outcome probabilities.

Dynamics attack
    A rotation-dynamics model and a target operator reachable by a mean
    shift of the neural state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .models import (
    CognitiveDistribution,
    HypothesisClass,
    VectorDistribution,
    linear_softmax_readout,
    predict_dynamics,
    predict_readout,
    rotation_dynamics,
    shift_distribution,
    subset_readout,
)
from .rng import stream
from .security import NoiseParameterization, ObjectiveSpec, objective_value


@dataclass(frozen=True)
class SubsetDefenseParams:
    m: int = 50
    subset_size: int = 5
    outcomes: int = 3
    attackers: int = 3
    attacker_weight: float = 2.0
    attacker_margin: float = 8.0
    channel_weight: float = 0.3
    channel_margin: float = 4.0
    baseline_scale: float = 1.0


@dataclass(frozen=True)
class SubsetDefense:
    baseline: VectorDistribution
    channel: object
    attackers: HypothesisClass
    subset: tuple


def subset_defense(seed: int, p: SubsetDefenseParams = SubsetDefenseParams()) -> SubsetDefense:
    r = stream(seed, "scenario")
    mu = r.normal(0.0, 1.0, p.m)
    q = VectorDistribution.gaussian(mu, np.full(p.m, p.baseline_scale))
    w = r.normal(0.0, p.channel_weight, (1, p.m))
    wt = np.vstack([w, -w]) / 2
    bt = np.array([p.channel_margin / 2, -p.channel_margin / 2]) - wt @ mu
    channel = linear_softmax_readout("subject", wt, bt)
    subset = tuple(range(p.subset_size))
    members = []
    for i in range(p.attackers):
        wa = r.normal(0.0, p.attacker_weight, (p.outcomes, p.subset_size))
        ba = -wa @ mu[list(subset)]
        ba[0] += p.attacker_margin
        members.append(subset_readout(f"attacker-{i}", subset, wa, ba, oda_level="gamma"))
    return SubsetDefense(q, channel, HypothesisClass(tuple(members), name="attackers"), subset)


def ray_energy(noise: NoiseParameterization, spec: ObjectiveSpec, mu: float | None = None,
               max_factor: float = 64.0, iters: int = 40) -> float:
    """Smallest total variance c^2 E(noise) at which the spec's term reaches mu.

    The noise is scaled by c >= 0 (mean and scale together); bisection
    assumes the term grows along the ray.  Returns inf when even
    ``max_factor`` times the noise stays below mu.
    """
    mu = spec.mu if mu is None else mu

    def term(c):
        scaled = NoiseParameterization(noise.kind, noise.mean * c, noise.scale * c, noise.support)
        return objective_value(scaled, spec).term

    if noise.energy() == 0.0:
        return 0.0 if mu <= 0 else math.inf
    hi = 1.0
    while term(hi) < mu:
        hi *= 2.0
        if hi > max_factor:
            return math.inf
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if term(mid) >= mu:
            hi = mid
        else:
            lo = mid
    return hi * hi * noise.energy()


@dataclass(frozen=True)
class ReadoutAttack:
    baseline: VectorDistribution
    attacker: object
    target: CognitiveDistribution


def readout_attack(seed: int, m: int = 4, sharpness: float = 6.0, confidence: float = 0.6,
                   samples: int = 4000) -> ReadoutAttack:
    r = stream(seed, "attack/readout")
    q = VectorDistribution.gaussian(r.normal(0.0, 1.0, m), np.ones(m))
    u = r.normal(size=m)
    u /= np.linalg.norm(u)

    def model(b):
        return linear_softmax_readout("attacker", np.vstack([sharpness * u, np.zeros(m)]),
                                      np.array([b, 0.0]), oda_level="gamma")

    # calibrate the bias so the baseline prediction has the requested confidence
    b = brentq(lambda b: predict_readout(model(b), q, samples, seed).outcome_probs[0] - confidence,
               -100.0, 100.0, xtol=1e-12)
    f = model(b)
    probs = predict_readout(f, q, samples, seed).outcome_probs
    order = np.argsort(-probs, kind="stable")
    target = probs.copy()
    target[order[0]], target[order[1]] = probs[order[1]], probs[order[0]]
    return ReadoutAttack(q, f, CognitiveDistribution.from_probs(target))


@dataclass(frozen=True)
class DynamicsAttack:
    baseline: VectorDistribution
    model: object
    target: object
    shift: np.ndarray


def dynamics_attack(seed: int, m: int = 4, dim: int = 4, generators: int = 3,
                    weight: float = 0.5, shift: float = 0.6, samples: int = 4000) -> DynamicsAttack:
    r = stream(seed, "attack/dynamics")
    q = VectorDistribution.gaussian(r.normal(0.0, 1.0, m), np.ones(m))
    g = rotation_dynamics("dynamics", r.normal(0.0, weight, (generators, m)), dim,
                          seed=seed, oda_level="gamma")
    u = r.normal(size=m)
    delta = shift * u / np.linalg.norm(u)
    moved = shift_distribution(q, VectorDistribution.gaussian(delta, np.zeros(m)))
    return DynamicsAttack(q, g, predict_dynamics(g, moved, samples, seed), delta)
