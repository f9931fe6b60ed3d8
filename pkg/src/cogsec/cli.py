"""Command-line entry point.

    cogsec stats-verify --seed 42 --out results/stats
    cogsec defend --config defend.json --threads 2
    cogsec ledger results/*/result.json --out results/ledger

Exit codes: 0 success, 2 invalid configuration, 1 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError
from .harness import (
    BLOCK_FOR_KIND,
    KINDS,
    emit_ledger,
    load_record,
    parse_config,
    run_scenario,
)

log = logging.getLogger("cogsec")

# which field of each block --samples overrides
SAMPLE_FIELD = {
    "stats-verify": "samples",
    "algebra-demo": "trials",
    "defend": "mc_samples",
    "attack": "mc_samples",
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cogsec", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run the {kind} scenario")
        s.add_argument("--config", type=Path, help="JSON scenario config")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--out", type=Path, help=f"output directory (default results/{kind})")
        s.add_argument("--threads", type=int, help="worker threads")
        s.add_argument("--samples", type=int, help="Monte Carlo sample count override")
    s = sub.add_parser("ledger", help="aggregate discrepancy ledgers from result records")
    s.add_argument("records", nargs="*", type=Path,
                   help="result.json files or directories containing one")
    s.add_argument("--out", type=Path, help="write ledger.md and ledger.csv here")
    return p


def _scenario_config(kind: str, args) -> dict:
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config} is not valid JSON", [str(exc)]) from None
        if not isinstance(data, dict):
            raise ConfigError("invalid scenario config", ["top level must be an object"])
    else:
        data = {"kind": kind}
    if data.get("kind", kind) != kind:
        raise ConfigError("invalid scenario config",
                          [f"config kind '{data['kind']}' does not match command '{kind}'"])
    data.setdefault("kind", kind)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.threads is not None:
        data["threads"] = args.threads
    data["out"] = str(args.out) if args.out is not None else data.get("out", f"results/{kind}")
    if args.samples is not None:
        if kind not in SAMPLE_FIELD:
            raise ConfigError("invalid scenario config", [f"--samples does not apply to {kind}"])
        block = dict(data.get(BLOCK_FOR_KIND[kind]) or {})
        block[SAMPLE_FIELD[kind]] = args.samples
        data[BLOCK_FOR_KIND[kind]] = block
    return data


def _collect_records(paths):
    out = []
    for p in paths:
        if p.is_dir():
            p = p / "result.json"
        out.append(load_record(p))
    return out


def _run(args) -> int:
    if args.command == "ledger":
        report = emit_ledger(_collect_records(args.records))
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "ledger.md").write_text(report.to_markdown())
            (args.out / "ledger.csv").write_text(report.to_csv())
        sys.stdout.write(report.to_markdown())
        return 0
    cfg = parse_config(_scenario_config(args.command, args))
    rec = run_scenario(cfg)
    for m in rec.metrics:
        se = "" if m.stderr is None else f" +/- {m.stderr:.3g}"
        print(f"{m.name}\t{m.value:.10g}{se}\t{m.provenance}")
    print(f"# {len(rec.metrics)} metrics, {len(rec.ledger)} ledger rows, "
          f"{rec.duration:.2f}s, written to {cfg.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
