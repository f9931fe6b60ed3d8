"""Seeded experiment runner: configs, scenario execution, records and the ledger.

A run is fully determined by its :class:`ScenarioConfig`.  Every random draw
comes from ``stream(seed, label, index)``, so serial and threaded runs give
identical numbers.  Results are written as one JSON record plus CSV tables,
each next to the resolved config that produced it.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError

from . import __version__
from .divergence import jsd_classical, pure_reduction_report, qjsd, roga_bound
from .errors import ConfigError
from .measurement import (
    agreement_rate,
    concentration_interval,
    exact_tail,
    max_tail_error,
    outside_probability,
    published_compound_pmf,
    published_gaussian_tail,
    similarity_tail,
)
from .models import HypothesisClass
from .projective import (
    CogitHypervector,
    bind,
    born_probability,
    bundle,
    measured_similarity,
    permute,
    unbind,
)
from .rng import stream
from .scenarios import SubsetDefenseParams, dynamics_attack, ray_energy, readout_attack, subset_defense
from .security import NoiseSpace, ObjectiveSpec, OptimizerConfig, class_dissimilarity, optimize
from .state_stats import (
    DistanceCdfModel,
    McEstimate,
    adjudicate_bures_cdf,
    bures_cdf,
    bures_from_fidelity,
    bures_normalized,
    empirical_cdf_deviation,
    fidelity_cdf,
    log_published_proximity,
    mean_bures_approx,
    sample_pair_fidelities,
)

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
KINDS = ("stats-verify", "concentration-table", "algebra-demo", "defend", "attack")
PROVENANCE = ("published-formula", "corrected-formula", "monte-carlo", "exact-enumeration")
SEED_MAX = 2 ** 64 - 1

# chances quoted for a random pair being closer than v, keyed by (D, v)
QUOTED_PROXIMITY = {
    (100, 0.95): 0.0039,
    (500, 0.95): 1.7e-5,
    (100, 0.5): 2.9e-38,
    (500, 0.5): 1.4e-182,
}
# quoted symmetric concentration intervals, keyed by (n, q)
QUOTED_INTERVALS = {
    (1000, 0.5): (0.425, 0.575),
    (1000, 0.25): (0.185, 0.315),
    (1000, 1 / 3): "0.26-4.0",
}


# -- configuration -------------------------------------------------------------

class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StatsBlock(_Block):
    dims: list[int] = Field(default_factory=lambda: [16, 100], min_length=1)
    samples: int = Field(100_000, ge=2)
    bures_v: list[float] = Field(default_factory=lambda: [0.95])
    published_dims: list[int] = Field(default_factory=lambda: [100, 500])
    published_v: list[float] = Field(default_factory=lambda: [0.95, 0.5])
    divergence_pairs: int = Field(1000, ge=0)
    divergence_dims: list[int] = Field(default_factory=lambda: [2, 4, 8])


class ConcentrationBlock(_Block):
    n: list[int] = Field(default_factory=lambda: [1000], min_length=1)
    q: list[float] = Field(default_factory=lambda: [0.5, 0.25, 1 / 3], min_length=1)
    mass: list[float] = Field(default_factory=lambda: [1 - 2e-6], min_length=1)
    p: float = Field(0.5, ge=0.0, le=1.0)
    wide_n: int = Field(10_000, ge=1)
    wide_interval: tuple[float, float] = (0.476, 0.524)


class AlgebraBlock(_Block):
    n: int = Field(1000, ge=2)
    trials: int = Field(1000, ge=1)
    bundle_size: int = Field(3, ge=1)
    dictionary: int = Field(10, ge=1)


class DefendBlock(_Block):
    m: int = Field(50, ge=1)
    subset_size: int = Field(5, ge=1)
    outcomes: int = Field(3, ge=2)
    attackers: int = Field(3, ge=1)
    attacker_weight: float = Field(2.0, gt=0)
    attacker_margin: float = 8.0
    channel_weight: float = Field(0.3, gt=0)
    channel_margin: float = 4.0
    lambdas: list[float] = Field(default_factory=lambda: [1.0], min_length=1)
    mu: float = Field(0.3, ge=0.0, le=1.0)
    mc_samples: int = Field(2000, ge=1)
    jsd_samples: int = Field(4000, ge=100)
    strategy: Literal["random", "es", "fd"] = "fd"
    budget: int = Field(2000, ge=1)
    step: float = Field(0.3, gt=0)
    compare_information: bool = True
    ray_energy: bool = True


class AttackBlock(_Block):
    variants: list[Literal["SMOA", "DMOA"]] = Field(default_factory=lambda: ["SMOA", "DMOA"],
                                                    min_length=1)
    lambdas: list[float] = Field(default_factory=lambda: [0.5], min_length=1)
    mc_samples: int = Field(4000, ge=1)
    jsd_samples: int = Field(4000, ge=100)
    strategy: Literal["random", "es", "fd"] = "es"
    budget: int = Field(500, ge=1)
    step: float = Field(0.3, gt=0)
    confidence: float = Field(0.6, gt=0.5, lt=1.0)
    orientation: Literal["closeness", "distance"] = "closeness"


BLOCK_FOR_KIND = {
    "stats-verify": "stats",
    "concentration-table": "concentration",
    "algebra-demo": "algebra",
    "defend": "defend",
    "attack": "attack",
}


class ScenarioConfig(_Block):
    version: Literal[1] = CONFIG_VERSION
    kind: Literal["stats-verify", "concentration-table", "algebra-demo", "defend", "attack"]
    seed: int = Field(ge=0, le=SEED_MAX)
    out: Optional[str] = None
    threads: int = Field(1, ge=1)
    stats: Optional[StatsBlock] = None
    concentration: Optional[ConcentrationBlock] = None
    algebra: Optional[AlgebraBlock] = None
    defend: Optional[DefendBlock] = None
    attack: Optional[AttackBlock] = None

    @property
    def block(self):
        """The parameter block for this kind, defaults filled in."""
        name = BLOCK_FOR_KIND[self.kind]
        got = getattr(self, name)
        if got is not None:
            return got
        return {"stats": StatsBlock, "concentration": ConcentrationBlock, "algebra": AlgebraBlock,
                "defend": DefendBlock, "attack": AttackBlock}[name]()

    def resolved(self) -> "ScenarioConfig":
        """Copy with the active block written out explicitly."""
        return self.model_copy(update={BLOCK_FOR_KIND[self.kind]: self.block})


def _semantic_violations(cfg: ScenarioConfig) -> list[str]:
    errs = []
    active = BLOCK_FOR_KIND[cfg.kind]
    for name in BLOCK_FOR_KIND.values():
        if name != active and getattr(cfg, name) is not None:
            errs.append(f"block '{name}' does not apply to scenario kind '{cfg.kind}'")
    b = cfg.block
    if cfg.kind == "stats-verify":
        errs += [f"stats.dims: dimension {d} must be >= 2" for d in b.dims if d < 2]
        errs += [f"stats.published_dims: dimension {d} must be >= 2" for d in b.published_dims if d < 2]
        errs += [f"stats.bures_v: {v} outside [0, 1]" for v in b.bures_v if not 0 <= v <= 1]
        errs += [f"stats.published_v: {v} outside (0, 1]" for v in b.published_v if not 0 < v <= 1]
        errs += [f"stats.divergence_dims: dimension {d} must be >= 1"
                 for d in b.divergence_dims if d < 1]
    elif cfg.kind == "concentration-table":
        errs += [f"concentration.n: {n} must be >= 1" for n in b.n if n < 1]
        errs += [f"concentration.q: {q} outside [0, 1]" for q in b.q if not 0 <= q <= 1]
        errs += [f"concentration.mass: {m} outside (0, 1)" for m in b.mass if not 0 < m < 1]
        lo, hi = b.wide_interval
        if not lo <= hi:
            errs.append("concentration.wide_interval: low exceeds high")
    elif cfg.kind == "defend":
        if b.subset_size > b.m:
            errs.append(f"defend.subset_size {b.subset_size} exceeds m={b.m}")
        errs += [f"defend.lambdas: {x} must be >= 0" for x in b.lambdas if x < 0]
    elif cfg.kind == "attack":
        errs += [f"attack.lambdas: {x} must be >= 0" for x in b.lambdas if x < 0]
    return errs


def _pydantic_messages(exc: PydanticValidationError) -> list[str]:
    return [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors()]


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a config mapping, collecting every violation into one error."""
    try:
        cfg = ScenarioConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ConfigError("invalid scenario config", _pydantic_messages(exc)) from None
    errs = _semantic_violations(cfg)
    if errs:
        raise ConfigError("invalid scenario config", errs)
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return cfg.model_dump(mode="json", exclude_none=True)


def dumps_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON", [str(exc)]) from None
    if not isinstance(data, dict):
        raise ConfigError("invalid scenario config", ["top level must be an object"])
    return parse_config(data)


def load_config(path) -> ScenarioConfig:
    return loads_config(Path(path).read_text())


def dump_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg) + "\n")


# -- records -------------------------------------------------------------------

@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    stderr: Optional[float]
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ValueError(f"provenance must be one of {PROVENANCE}, got {self.provenance!r}")


@dataclass(frozen=True)
class LedgerEntry:
    topic: str
    reference: str
    published_value: Union[float, str, None]
    computed_value: Union[float, str, None]
    verdict: str
    note: str = ""


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: tuple


@dataclass
class ResultRecord:
    scenario: str
    version: str
    config: dict
    metrics: list
    ledger: list
    tables: dict
    duration: float
    seed: int

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def value(self, name: str) -> float:
        return self.metric(name).value

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "version": self.version, "seed": self.seed,
            "config": self.config, "duration": self.duration,
            "metrics": [asdict(m) for m in self.metrics],
            "ledger": [asdict(e) for e in self.ledger],
            "tables": {k: {"columns": list(t.columns), "rows": [list(r) for r in t.rows]}
                       for k, t in self.tables.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(d["scenario"], d["version"], d["config"],
                   [Metric(**m) for m in d["metrics"]],
                   [LedgerEntry(**e) for e in d["ledger"]],
                   {k: Table(tuple(t["columns"]), tuple(tuple(r) for r in t["rows"]))
                    for k, t in d["tables"].items()},
                   d["duration"], d["seed"])

    def reproducible_view(self) -> dict:
        """Everything except wall-clock duration."""
        d = self.to_dict()
        d.pop("duration")
        return d


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def record_to_json(rec: ResultRecord) -> str:
    return json.dumps(rec.to_dict(), indent=2, default=_json_default)


def load_record(path) -> ResultRecord:
    return ResultRecord.from_dict(json.loads(Path(path).read_text()))


# -- scenario plumbing -----------------------------------------------------------

class _Collector:
    def __init__(self):
        self.metrics: list[Metric] = []
        self.ledger: list[LedgerEntry] = []
        self.tables: dict[str, Table] = {}

    def metric(self, name, value, provenance, stderr=None):
        self.metrics.append(Metric(name, float(value), None if stderr is None else float(stderr),
                                   provenance))

    def mc(self, name, est: McEstimate):
        self.metric(name, est.value, "monte-carlo", est.standard_error)

    def table(self, name, columns, rows):
        self.tables[name] = Table(tuple(columns), tuple(tuple(_plain(v) for v in r) for r in rows))


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _pmap(fn, items, threads: int):
    """Order-preserving map; threads only change wall-clock time."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


# -- stats-verify ----------------------------------------------------------------

def _run_stats(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    seed = cfg.seed

    def fidelity_task(i_d):
        i, d = i_d
        fi = sample_pair_fidelities(d, b.samples, stream(seed, "stats/fidelity", i))
        dev_c = empirical_cdf_deviation(fi, lambda y: fidelity_cdf(y, d, "corrected"))
        dev_p = empirical_cdf_deviation(fi, lambda y: fidelity_cdf(y, d, "published"))
        return d, McEstimate.from_samples(fi, seed), McEstimate.from_samples(bures_from_fidelity(fi), seed), dev_c, dev_p

    rows = []
    for d, fi, bu, dev_c, dev_p in _pmap(fidelity_task, enumerate(b.dims), cfg.threads):
        out.mc(f"fidelity_mean[D={d}]", fi)
        out.metric(f"fidelity_mean_exact[D={d}]", 1.0 / d, "corrected-formula")
        out.metric(f"fidelity_cdf_sup_deviation[D={d},corrected]", dev_c, "monte-carlo")
        out.metric(f"fidelity_cdf_sup_deviation[D={d},published]", dev_p, "monte-carlo")
        out.mc(f"bures_mean[D={d}]", bu)
        approx = mean_bures_approx(d)
        out.metric(f"bures_mean_approx[D={d}]", approx, "published-formula")
        rows.append((d, fi.value, fi.standard_error, dev_c, dev_p, bu.value, approx))
        out.ledger.append(LedgerEntry(
            "mean-bures-approximation", f"closed-form mean Bures distance, D={d}", approx, bu.value,
            "approximate" if abs(approx - bu.value) > 3 * bu.standard_error else "consistent",
            f"Monte Carlo mean {bu.value:.6g} +/- {bu.standard_error:.2g}"))
        out.ledger.append(LedgerEntry(
            "fidelity-cdf-divisor", f"closed-form fidelity CDF, D={d}",
            f"sup deviation {dev_p:.4g}", f"sup deviation {dev_c:.4g}",
            "corrected" if dev_c < dev_p else "published",
            "published form divides by D-1; corrected CDF is 1-(1-y)^(D-1)"))
    out.table("fidelity", ("dim", "fidelity_mean", "fidelity_se", "sup_dev_corrected",
                           "sup_dev_published", "bures_mean", "bures_mean_approx"), rows)

    grid = [(d, v) for d in b.dims for v in b.bures_v]

    def adjudicate_task(i_dv):
        i, (d, v) = i_dv
        return adjudicate_bures_cdf(v, d, b.samples, stream(seed, "stats/bures", i), seed)

    rows = []
    for a in _pmap(adjudicate_task, enumerate(grid), cfg.threads):
        tag = f"[D={a.dim},v={a.v}]"
        out.mc(f"bures_cdf_mc{tag}", a.estimate)
        out.metric(f"bures_cdf_corrected{tag}", a.corrected_value, "corrected-formula")
        out.metric(f"bures_cdf_published{tag}", a.published_value, "published-formula")
        out.metric(f"bures_proximity_published{tag}", a.published_tail_value, "published-formula")
        rows.append((a.dim, a.v, a.estimate.value, a.estimate.standard_error, a.corrected_value,
                     a.published_value, a.published_tail_value, a.verdict))
        out.ledger.append(LedgerEntry(
            "bures-cdf-divisor", f"chance of a random pair within v={a.v}, D={a.dim}",
            a.published_tail_value, a.estimate.value, a.verdict,
            f"corrected (2v^2-v^4)^(D-1) = {a.corrected_value:.6g}; "
            f"published 1-(.)^(D-1)/(D-1) = {a.published_value:.6g}; "
            f"Monte Carlo se {a.estimate.standard_error:.2g}"))
    out.table("bures_cdf", ("dim", "v", "mc", "mc_se", "corrected", "published_cdf",
                            "published_tail", "verdict"), rows)

    rows = []
    for d in b.published_dims:
        for v in b.published_v:
            lp = float(log_published_proximity(v, d))
            val = math.exp(lp) if lp > -745 else 0.0
            mant, expo = _sci(lp)
            tag = f"[D={d},v={v}]"
            out.metric(f"published_proximity{tag}", val, "published-formula")
            out.metric(f"published_proximity_log10{tag}", lp / math.log(10), "published-formula")
            corrected = float(bures_cdf(v, DistanceCdfModel("corrected", d)))
            rows.append((d, v, f"{mant:.4f}e{expo}", lp / math.log(10), corrected))
            quoted = QUOTED_PROXIMITY.get((d, v))
            if quoted is not None:
                ok = _same_2sf(quoted, mant, expo)
                out.ledger.append(LedgerEntry(
                    "published-proximity-values", f"quoted proximity chance, D={d}, v={v}",
                    quoted, f"{mant:.2f}e{expo}", "reproduced" if ok else "mismatch",
                    f"formula is the tail term (2v^2-v^4)^(D-1)/(D-1); "
                    f"the corrected probability is {corrected:.4g}"))
    out.table("published_proximity", ("dim", "v", "value", "log10_value", "corrected_probability"),
              rows)
    if (500, 0.95) in {(d, v) for d in b.published_dims for v in b.published_v}:
        lp = float(log_published_proximity(0.95, 500))
        out.ledger.append(LedgerEntry(
            "proximity-typo", "quoted '2.9x1.7^-5' for D=500, v=0.95", "2.9x1.7^-5",
            math.exp(lp), "typo",
            "the intended value is 1.7e-5 (17 in a million); 2.9x1.7^-5 would be 2.05e-1"))

    _divergence_checks(cfg, out)


def _sci(log_value: float) -> tuple[float, int]:
    l10 = log_value / math.log(10)
    expo = math.floor(l10)
    mant = 10 ** (l10 - expo)
    if round(mant, 6) >= 10:
        mant, expo = mant / 10, expo + 1
    return mant, expo


def _same_2sf(quoted: float, mant: float, expo: int) -> bool:
    qm, qe = _sci(math.log(quoted))
    return qe == expo and round(qm, 1) == round(mant, 1)


def _random_density(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _divergence_checks(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    if b.divergence_pairs == 0:
        return
    rng = stream(cfg.seed, "stats/divergence", 0)
    worst_diag = 0.0
    for _ in range(b.divergence_pairs):
        d = int(rng.choice(b.divergence_dims))
        p = rng.dirichlet(np.ones(d))
        q = rng.dirichlet(np.ones(d))
        worst_diag = max(worst_diag, abs(qjsd(np.diag(p), np.diag(q)) - jsd_classical(p, q)))
    out.metric("qjsd_diagonal_max_gap", worst_diag, "monte-carlo")

    violations, worst = 0, -math.inf
    for _ in range(b.divergence_pairs):
        d = int(rng.choice(b.divergence_dims))
        rho, sigma = _random_density(d, rng), _random_density(d, rng)
        gap = qjsd(rho, sigma) - float(roga_bound(bures_normalized(rho, sigma)))
        worst = max(worst, gap)
        violations += gap > 1e-9
    out.metric("roga_bound_violations", violations, "monte-carlo")
    out.metric("roga_bound_max_excess", worst, "monte-carlo")

    p, q = (0.5, 0.5), (1.0, 0.0)
    rep = pure_reduction_report(p, q)
    out.metric("pure_reduction_shortcut", rep.reduction, "published-formula")
    out.metric("pure_reduction_exact", rep.exact, "exact-enumeration")
    out.ledger.append(LedgerEntry(
        "pure-state-qjsd-reduction", "QJSD of amplitude-encoded pure states read as classical JSD",
        rep.reduction, rep.exact, "shortcut-invalid" if abs(rep.gap) > 1e-9 else "consistent",
        f"p={p}, q={q}: pure-state QJSD is computed from the mixture's eigenvalues, "
        "not from p and q directly"))


# -- concentration-table ---------------------------------------------------------

def _run_concentration(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    grid = [(n, q, m) for n in b.n for q in b.q for m in b.mass]
    rows = _pmap(lambda t: concentration_interval(*t), grid, cfg.threads)
    table = []
    for r in rows:
        tag = f"[n={r.n},q={r.q:.6g},mass={r.mass:.8g}]"
        out.metric(f"interval_low{tag}", r.low, "exact-enumeration")
        out.metric(f"interval_high{tag}", r.high, "exact-enumeration")
        out.metric(f"interval_outside_mass{tag}", r.outside_mass, "exact-enumeration")
        table.append((r.n, r.q, r.mass, r.low, r.high, r.half_width, r.outside_mass))
        quoted = _quoted_interval(r.n, r.q)
        if quoted is None:
            continue
        if isinstance(quoted, str):
            out.ledger.append(LedgerEntry(
                "interval-0.26-4.0", f"quoted confidence range for q={r.q:.4g}, n={r.n}", quoted,
                f"[{r.low:.4f}, {r.high:.4f}]", "uninterpretable-as-printed",
                "an upper end of 4.0 is not a normalized distance; the exact interval "
                "reads as 0.26-0.40"))
        else:
            ok = abs(quoted[0] - r.low) < 5e-3 and abs(quoted[1] - r.high) < 5e-3
            out.ledger.append(LedgerEntry(
                "concentration-interval", f"quoted interval for q={r.q:.4g}, n={r.n}",
                f"[{quoted[0]}, {quoted[1]}]", f"[{r.low:.4f}, {r.high:.4f}]",
                "reproduced" if ok else "mismatch", f"outside mass {r.outside_mass:.3g}"))
    out.table("intervals", ("n", "q", "mass", "low", "high", "half_width", "outside_mass"), table)

    errs = []
    for n in b.n:
        for q in b.q:
            r = agreement_rate(b.p, q)
            e = max_tail_error(n, r, continuity=True)
            e_raw = max_tail_error(n, r, continuity=False)
            tag = f"[n={n},p={b.p},q={q:.6g}]"
            out.metric(f"gauss_tail_max_error{tag}", e, "exact-enumeration")
            out.metric(f"gauss_tail_max_error_uncorrected{tag}", e_raw, "exact-enumeration")
            errs.append((n, b.p, q, r, e, e_raw))
    out.table("tail_errors", ("n", "p", "q", "r", "max_error_continuity", "max_error_plain"), errs)

    n = b.n[0]
    q = b.q[0]
    mean = n * agreement_rate(b.p, q)
    sd = math.sqrt(mean * (1 - agreement_rate(b.p, q)))
    z = mean + 5 * sd
    pub = float(published_gaussian_tail(z, n, b.p, q))
    exact = float(exact_tail(math.ceil(z), n, agreement_rate(b.p, q)))
    out.metric("published_gauss_tail_at_5sd", pub, "published-formula")
    out.metric("gauss_tail_at_5sd", float(similarity_tail(z, n, b.p, q)), "corrected-formula")
    out.metric("exact_tail_at_5sd", exact, "exact-enumeration")
    out.ledger.append(LedgerEntry(
        "erf-prefactor", f"Gaussian tail of the agreement count, n={n}, z=mean+5sd", pub, exact,
        "published-incorrect",
        "a 1/sqrt(2) prefactor on erf makes the tail negative for large z "
        "(limit 1/2-1/sqrt(2) = -0.2071); 1/2 erfc(.) is the correct form"))

    k = int(round(mean))
    pub_k = published_compound_pmf(k, n, b.p, q)
    exact_cdf = 1.0 - float(exact_tail(k + 1, n, agreement_rate(b.p, q)))
    pub_total = published_compound_pmf(n, n, b.p, q)
    out.metric("published_compound_pmf_at_mean", pub_k, "published-formula")
    out.metric("exact_cdf_at_mean", exact_cdf, "exact-enumeration")
    out.ledger.append(LedgerEntry(
        "compound-pmf", f"closed form for Pr[k], n={n}, p={b.p}, q={q:.4g}, k={k}", pub_k,
        exact_cdf, "not-normalized",
        f"sum_j f(j)^n only has j in {{0, 1}} terms; its value at k=n is {pub_total:.3g}, "
        "not 1. The exact law is Binomial(n, p+q-2pq)"))

    lo, hi = b.wide_interval
    wide = outside_probability(b.wide_n, 0.5, lo, hi)
    out.metric(f"outside_probability[n={b.wide_n},{lo},{hi}]", wide, "exact-enumeration")
    if b.wide_n == 10_000 and (lo, hi) == (0.476, 0.524):
        out.ledger.append(LedgerEntry(
            "wide-interval", "random pairs at n=10000 outside [0.476, 0.524]", 1.5e-6, wide,
            "reproduced" if abs(wide - 1.5e-6) < 0.05e-6 else "mismatch",
            "exact Binomial(10000, 1/2) mass outside the closed interval"))


def _quoted_interval(n, q):
    for (qn, qq), v in QUOTED_INTERVALS.items():
        if qn == n and abs(qq - q) < 1e-9:
            return v
    return None


# -- algebra-demo -----------------------------------------------------------------

def _algebra_trial(args):
    seed, b, t = args
    rng = stream(seed, "algebra", t)
    x = CogitHypervector.random(b.n, rng)
    y = CogitHypervector.random(b.n, rng)
    back = unbind(bind(x, y), y)
    bind_err = max(np.max(np.abs(back.alpha - x.alpha)), np.max(np.abs(back.beta - x.beta)))
    a, c = (int(v) for v in rng.integers(0, b.n, 2))
    compose = permute(permute(x, a), c) == permute(x, a + c)
    inverse = permute(permute(x, a), -a) == x
    identity = permute(x, b.n) == x
    members = [x] + [CogitHypervector.random(b.n, rng) for _ in range(b.bundle_size - 1)]
    s = bundle(members)
    own = measured_similarity(s, members[0], rng)
    others = [measured_similarity(s, CogitHypervector.random(b.n, rng), rng)
              for _ in range(b.dictionary)]
    return bind_err, compose and inverse and identity, own > max(others), own, float(np.mean(others))


def _run_algebra(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    res = _pmap(_algebra_trial, [(cfg.seed, b, t) for t in range(b.trials)], cfg.threads)
    bind_err = max(r[0] for r in res)
    out.metric("bind_unbind_max_error", bind_err, "monte-carlo")
    out.metric("permutation_law_failures", sum(not r[1] for r in res), "monte-carlo")
    wins = np.array([r[2] for r in res], dtype=float)
    out.metric("bundle_recovery_rate", wins.mean(), "monte-carlo",
               math.sqrt(wins.mean() * (1 - wins.mean()) / wins.size))
    own = np.array([r[3] for r in res])
    rand = np.array([r[4] for r in res])
    out.mc("bundle_member_similarity", McEstimate.from_samples(own, cfg.seed))
    out.mc("random_dictionary_similarity", McEstimate.from_samples(rand, cfg.seed))
    out.table("trials", ("trial", "bind_unbind_error", "permutation_laws_hold", "recovered",
                         "member_similarity", "mean_random_similarity"),
              [(t, *r) for t, r in enumerate(res)])

    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    zero = np.array([1.0, 0.0])
    one = np.array([0.0, 1.0])
    amp = float(abs(np.vdot(zero, plus)))
    unsquared_total = amp + float(abs(np.vdot(one, plus)))
    out.metric("born_unsquared_total[|+>]", unsquared_total, "published-formula")
    out.metric("born_probability[|+>,0]", born_probability(plus, zero), "exact-enumeration")
    out.ledger.append(LedgerEntry(
        "born-rule-square", "measurement probability written as <a|psi>", amp,
        born_probability(plus, zero), "published-incorrect",
        f"unsquared amplitudes of |+> sum to {unsquared_total:.4f}; |<a|psi>|^2 sums to 1"))


# -- defend ------------------------------------------------------------------------

def _defense_specs(cfg: ScenarioConfig, lam: float):
    b = cfg.block
    params = SubsetDefenseParams(b.m, b.subset_size, b.outcomes, b.attackers, b.attacker_weight,
                                 b.attacker_margin, b.channel_weight, b.channel_margin)
    sc = subset_defense(cfg.seed, params)
    common = dict(baseline=sc.baseline, lam=lam, mu=b.mu, ground_truth=sc.channel,
                  mc_samples=b.mc_samples, jsd_samples=b.jsd_samples, seed=cfg.seed)
    smon = ObjectiveSpec("SMON", hypothesis_class=sc.attackers, **common)
    sion = ObjectiveSpec("SION", **common)
    return sc, smon, sion


def _defend_task(args):
    cfg, lam, variant = args
    b = cfg.block
    sc, smon, sion = _defense_specs(cfg, lam)
    spec = smon if variant == "SMON" else sion
    space = NoiseSpace(b.m, optimize_mean=False)
    res = optimize(spec, space, OptimizerConfig(b.strategy, b.budget, b.step, cfg.seed))
    noise = res.best_noise
    worst_s = class_dissimilarity(sc.attackers, sc.baseline, noise, b.mc_samples, cfg.seed)
    # the separation is judged on the attackers' worst case for both runs
    ray = ray_energy(noise, smon) if b.ray_energy else math.nan
    return variant, lam, res, worst_s, ray, sc.subset


def _run_defend(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    variants = ["SMON", "SION"] if b.compare_information else ["SMON"]
    tasks = [(cfg, lam, v) for lam in b.lambdas for v in variants]
    summary = []
    for variant, lam, res, worst_s, ray, subset in _pmap(_defend_task, tasks, cfg.threads):
        tag = f"[{variant},lambda={lam}]"
        ev = res.best_evaluation
        noise = res.best_noise
        mc = "monte-carlo"
        out.metric(f"constraint_satisfied{tag}", float(res.constraint_satisfied), mc)
        out.metric(f"objective{tag}", ev.objective, mc)
        out.metric(f"term{tag}", ev.term, mc)
        out.metric(f"penalty{tag}", ev.penalty, mc)
        out.metric(f"noise_energy{tag}", noise.energy(), mc)
        out.metric(f"subset_energy_fraction{tag}", noise.energy_fraction(subset), mc)
        out.metric(f"attacker_worst_dissimilarity{tag}", worst_s, mc)
        out.metric(f"ray_energy{tag}", ray, mc)
        out.metric(f"evaluations{tag}", res.evaluations, mc)
        summary.append((variant, lam, res.constraint_satisfied, ev.objective, ev.term, ev.penalty,
                        noise.energy(), noise.energy_fraction(subset), worst_s, ray))
        out.table(f"trace_{variant}_lambda{lam}", ("evaluation", "objective", "slack"), res.trace)
        out.table(f"noise_{variant}_lambda{lam}", ("coordinate", "mean", "scale"),
                  [(i, float(noise.mean[i]), float(noise.scale[i])) for i in range(noise.dim)])
    out.table("defend_summary", ("variant", "lambda", "constraint_satisfied", "objective", "term",
                                 "penalty", "noise_energy", "subset_energy_fraction",
                                 "attacker_worst_dissimilarity", "ray_energy"), summary)


# -- attack ------------------------------------------------------------------------

def _attack_task(args):
    cfg, lam, variant = args
    b = cfg.block
    if variant == "SMOA":
        sc = readout_attack(cfg.seed, confidence=b.confidence, samples=b.mc_samples)
        spec = ObjectiveSpec("SMOA", sc.baseline, lam=lam,
                             hypothesis_class=HypothesisClass((sc.attacker,)), target=sc.target,
                             mc_samples=b.mc_samples, jsd_samples=b.jsd_samples, seed=cfg.seed)
    else:
        sc = dynamics_attack(cfg.seed, samples=b.mc_samples)
        spec = ObjectiveSpec("DMOA", sc.baseline, lam=lam, hypothesis_class=HypothesisClass((sc.model,)),
                             target=sc.target, mc_samples=b.mc_samples, jsd_samples=b.jsd_samples,
                             seed=cfg.seed, orientation=b.orientation)
    space = NoiseSpace(spec.dim)
    res = optimize(spec, space, OptimizerConfig(b.strategy, b.budget, b.step, cfg.seed))
    return variant, lam, res


def _run_attack(cfg: ScenarioConfig, out: _Collector):
    b = cfg.block
    tasks = [(cfg, lam, v) for lam in b.lambdas for v in b.variants]
    summary = []
    for variant, lam, res in _pmap(_attack_task, tasks, cfg.threads):
        tag = f"[{variant},lambda={lam}]"
        ev = res.best_evaluation
        mc = "monte-carlo"
        out.metric(f"objective{tag}", ev.objective, mc)
        out.metric(f"attainment{tag}", ev.term, mc)
        out.metric(f"detectability{tag}", ev.penalty, mc)
        out.metric(f"noise_energy{tag}", res.best_noise.energy(), mc)
        out.metric(f"evaluations{tag}", res.evaluations, mc)
        summary.append((variant, lam, ev.objective, ev.term, ev.penalty, res.best_noise.energy()))
        out.table(f"trace_{variant}_lambda{lam}", ("evaluation", "objective", "slack"), res.trace)
    out.table("attack_summary", ("variant", "lambda", "objective", "attainment", "detectability",
                                 "noise_energy"), summary)


RUNNERS = {
    "stats-verify": _run_stats,
    "concentration-table": _run_concentration,
    "algebra-demo": _run_algebra,
    "defend": _run_defend,
    "attack": _run_attack,
}


# -- entry points --------------------------------------------------------------------

def check_writable(path) -> Path:
    """Create ``path`` if needed and prove a file can be written there."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=p, prefix=".probe-"):
        pass
    return p


def run_scenario(cfg: ScenarioConfig | dict, write: bool = True) -> ResultRecord:
    """Execute a scenario and, when ``cfg.out`` is set, write its outputs."""
    if isinstance(cfg, dict):
        cfg = parse_config(cfg)
    else:
        errs = _semantic_violations(cfg)
        if errs:
            raise ConfigError("invalid scenario config", errs)
    cfg = cfg.resolved()
    out_dir = check_writable(cfg.out) if (write and cfg.out) else None
    log.info("running %s with seed %d", cfg.kind, cfg.seed)
    t0 = time.perf_counter()
    col = _Collector()
    RUNNERS[cfg.kind](cfg, col)
    rec = ResultRecord(cfg.kind, __version__, config_to_dict(cfg), col.metrics, col.ledger,
                       col.tables, time.perf_counter() - t0, cfg.seed)
    if out_dir is not None:
        write_record(rec, out_dir)
    return rec


def _write_csv(path: Path, columns, rows, seed: int):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*columns, "seed"])
        for r in rows:
            w.writerow([*r, seed])


def write_record(rec: ResultRecord, out_dir) -> None:
    out_dir = Path(out_dir)
    (out_dir / "config.json").write_text(json.dumps(rec.config, indent=2, sort_keys=True) + "\n")
    (out_dir / "result.json").write_text(record_to_json(rec) + "\n")
    _write_csv(out_dir / "metrics.csv", ("name", "value", "stderr", "provenance"),
               [(m.name, m.value, "" if m.stderr is None else m.stderr, m.provenance)
                for m in rec.metrics], rec.seed)
    _write_csv(out_dir / "ledger.csv", LEDGER_COLUMNS[1:],
               [_ledger_row(e)[1:] for e in rec.ledger], rec.seed)
    for name, t in rec.tables.items():
        _write_csv(out_dir / f"table_{name}.csv", t.columns, t.rows, rec.seed)


# -- ledger report ------------------------------------------------------------------

LEDGER_COLUMNS = ("scenario", "topic", "reference", "published_value", "computed_value",
                  "verdict", "note")


def _ledger_row(e: LedgerEntry, scenario: str = "") -> tuple:
    return (scenario, e.topic, e.reference, _fmt(e.published_value), _fmt(e.computed_value),
            e.verdict, e.note)


@dataclass
class LedgerReport:
    tables: dict = field(default_factory=dict)

    def __len__(self):
        return sum(len(rows) for rows in self.tables.values())

    def to_markdown(self) -> str:
        parts = []
        for topic, rows in self.tables.items():
            parts.append(f"## {topic}\n")
            parts.append("| " + " | ".join(LEDGER_COLUMNS[2:]) + " | seed |")
            parts.append("|" + "---|" * (len(LEDGER_COLUMNS) - 1))
            for scenario, seed, row in rows:
                cells = [str(c).replace("|", "/") for c in row[2:]]
                parts.append("| " + " | ".join(cells) + f" | {seed} |")
            parts.append("")
        return "\n".join(parts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([*LEDGER_COLUMNS, "seed"])
        for rows in self.tables.values():
            for scenario, seed, row in rows:
                w.writerow([*row, seed])
        return buf.getvalue()


def emit_ledger(records) -> LedgerReport:
    """Group every ledger entry of ``records`` into one table per topic."""
    report = LedgerReport()
    for rec in records:
        for e in rec.ledger:
            report.tables.setdefault(e.topic, []).append((rec.scenario, rec.seed,
                                                          _ledger_row(e, rec.scenario)))
    return report


__all__ = [
    "AlgebraBlock", "AttackBlock", "ConcentrationBlock", "DefendBlock", "KINDS", "LedgerEntry",
    "LedgerReport", "Metric", "PROVENANCE", "ResultRecord", "ScenarioConfig", "StatsBlock", "Table",
    "check_writable", "dump_config", "dumps_config", "emit_ledger", "load_config", "load_record",
    "loads_config", "parse_config", "run_scenario", "write_record",
]
