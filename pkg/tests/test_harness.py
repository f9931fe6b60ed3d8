import csv
import json
import os
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogsec.errors import ConfigError
from cogsec.harness import (
    KINDS,
    PROVENANCE,
    ResultRecord,
    ScenarioConfig,
    dump_config,
    dumps_config,
    emit_ledger,
    load_config,
    load_record,
    loads_config,
    parse_config,
    run_scenario,
)

SMALL_STATS = {"dims": [8], "samples": 100_000, "published_dims": [100], "published_v": [0.5],
               "divergence_pairs": 50}


def stats_cfg(**kw):
    return {"kind": "stats-verify", "seed": 42, "stats": dict(SMALL_STATS), **kw}


# -- config --------------------------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_config_round_trip_defaults(kind):
    cfg = parse_config({"kind": kind, "seed": 3}).resolved()
    assert loads_config(dumps_config(cfg)) == cfg


@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 8),
       st.lists(st.floats(0, 5, allow_nan=False), min_size=1, max_size=4),
       st.floats(0, 1, allow_nan=False))
@settings(max_examples=40)
def test_config_round_trip_defend(seed, threads, lambdas, mu):
    cfg = parse_config({"kind": "defend", "seed": seed, "threads": threads,
                        "defend": {"lambdas": lambdas, "mu": mu}})
    assert loads_config(dumps_config(cfg)) == cfg


def test_config_file_round_trip(tmp_path):
    cfg = parse_config(stats_cfg(out="x"))
    dump_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg


def test_unknown_keys_list_every_violation():
    with pytest.raises(ConfigError) as exc:
        parse_config({"kind": "defend", "seed": 1, "lamdba": 2,
                      "defend": {"mu": 3.0, "lambdsa": [1.0]}})
    text = " ".join(exc.value.violations)
    assert len(exc.value.violations) == 3
    assert "lamdba" in text and "lambdsa" in text and "mu" in text


def test_semantic_violations():
    with pytest.raises(ConfigError) as exc:
        parse_config({"kind": "stats-verify", "seed": 1, "defend": {},
                      "stats": {"dims": [1], "bures_v": [1.5]}})
    assert len(exc.value.violations) == 3
    with pytest.raises(ConfigError):
        parse_config({"kind": "defend", "seed": 1, "defend": {"m": 3, "subset_size": 5}})


@pytest.mark.parametrize("bad", [
    {"kind": "stats-verify"},
    {"kind": "nope", "seed": 1},
    {"kind": "attack", "seed": -1},
    {"kind": "attack", "seed": 2 ** 64},
    {"kind": "attack", "seed": 1, "version": 2},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_loads_config_rejects_non_objects():
    with pytest.raises(ConfigError):
        loads_config("[1, 2]")
    with pytest.raises(ConfigError):
        loads_config("{not json")


# -- runs ------------------------------------------------------------------------------------

def test_stats_verify_is_reproducible():
    a = run_scenario(stats_cfg(), write=False)
    b = run_scenario(stats_cfg(), write=False)
    assert a.reproducible_view() == b.reproducible_view()
    assert all(m.provenance in PROVENANCE for m in a.metrics)


def test_thread_count_does_not_change_results():
    cfg = stats_cfg()
    cfg["stats"] = dict(SMALL_STATS, dims=[4, 8], samples=20_000)
    one = run_scenario({**cfg, "threads": 1}, write=False).reproducible_view()
    two = run_scenario({**cfg, "threads": 2}, write=False).reproducible_view()
    one["config"].pop("threads"), two["config"].pop("threads")
    assert one == two


def test_concentration_interval_q_quarter():
    rec = run_scenario({"kind": "concentration-table", "seed": 0,
                        "concentration": {"q": [0.25]}}, write=False)
    tag = "[n=1000,q=0.25,mass=0.999998]"
    assert rec.value(f"interval_low{tag}") == pytest.approx(0.185, abs=1e-12)
    assert rec.value(f"interval_high{tag}") == pytest.approx(0.315, abs=1e-12)


def test_algebra_demo_small():
    rec = run_scenario({"kind": "algebra-demo", "seed": 1,
                        "algebra": {"n": 500, "trials": 50}}, write=False)
    assert rec.value("bundle_recovery_rate") == 1.0
    assert rec.value("permutation_law_failures") == 0


def test_outputs_written_with_config_and_seed(tmp_path):
    out = tmp_path / "run"
    rec = run_scenario({"kind": "concentration-table", "seed": 5, "out": str(out)})
    assert json.loads((out / "config.json").read_text())["seed"] == 5
    assert load_record(out / "result.json").reproducible_view() == rec.reproducible_view()
    csvs = sorted(out.glob("*.csv"))
    assert {p.name for p in csvs} >= {"metrics.csv", "ledger.csv"}
    for p in csvs:
        with p.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0][-1] == "seed" and all(r[-1] == "5" for r in rows[1:])


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_out_fails_before_compute(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    with pytest.raises(OSError):
        run_scenario({"kind": "stats-verify", "seed": 1, "out": str(locked / "x")})


def test_out_path_blocked_by_file_fails_before_compute(tmp_path, monkeypatch):
    import cogsec.harness as h
    blocker = tmp_path / "file"
    blocker.write_text("")
    called = []
    monkeypatch.setitem(h.RUNNERS, "stats-verify", lambda cfg, out: called.append(1))
    with pytest.raises(OSError):
        run_scenario({"kind": "stats-verify", "seed": 1, "out": str(blocker / "sub")})
    assert not called


# -- ledger -----------------------------------------------------------------------------------

def test_empty_ledger():
    rep = emit_ledger([])
    assert len(rep) == 0 and rep.to_markdown() == ""


def test_ledger_contrasts_quoted_proximity_with_monte_carlo():
    cfg = stats_cfg()
    cfg["stats"] = dict(SMALL_STATS, dims=[100], samples=20_000)
    rep = emit_ledger([run_scenario(cfg, write=False)])
    rows = [r for _, _, r in rep.tables["bures-cdf-divisor"]]
    (row,) = [r for r in rows if "D=100" in r[2]]
    assert float(row[3]) == pytest.approx(0.0039, abs=5e-5)
    # Monte Carlo chance of b < 0.95 at D=100 sits near the corrected 0.3884
    assert float(row[4]) == pytest.approx(0.3884, abs=0.02)
    assert row[5] == "corrected"
    assert "| chance of a random pair within v=0.95, D=100 |" in rep.to_markdown()


def test_ledger_flags_uninterpretable_range():
    rec = run_scenario({"kind": "concentration-table", "seed": 0,
                        "concentration": {"q": [1 / 3]}}, write=False)
    rep = emit_ledger([rec])
    (row,) = [r for _, _, r in rep.tables["interval-0.26-4.0"]]
    assert row[3] == "0.26-4.0" and row[5] == "uninterpretable-as-printed"
    assert "interval-0.26-4.0" in rep.to_csv()


def test_record_dict_round_trip():
    rec = run_scenario({"kind": "concentration-table", "seed": 2}, write=False)
    back = ResultRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert back.reproducible_view() == rec.reproducible_view()
    with pytest.raises(KeyError):
        rec.metric("missing")


def test_run_scenario_revalidates_model_instances():
    cfg = ScenarioConfig.model_construct(version=1, kind="defend", seed=1, out=None, threads=1,
                                         stats={"x": 1}, concentration=None, algebra=None,
                                         defend=None, attack=None)
    with pytest.raises(ConfigError):
        run_scenario(cfg, write=False)
