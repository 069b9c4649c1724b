"""Command line: ``ransim run|list-experiments|validate``.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import traceback

from . import harness

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ransim", description="Multi-AIV RAN enabler experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario config and write CSVs plus a manifest")
    r.add_argument("config", help="path to a JSON scenario config")
    r.add_argument("--seeds", type=int, metavar="N", help="use seeds 0..N-1 instead of the config's list")
    r.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    r.add_argument("--parallel", type=int, default=1, metavar="K", help="worker processes (default: 1)")
    sub.add_parser("list-experiments", help="list experiment kinds and their canonical configs")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    return ap


def _load(path: str, seeds: int | None = None) -> harness.ScenarioConfig:
    cfg = harness.load_config(path)
    if seeds is not None:
        if seeds < 1:
            raise harness.ConfigError("--seeds must be >= 1")
        cfg = dataclasses.replace(cfg, seeds=list(range(seeds)))
        harness.validate_config(cfg)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "list-experiments":
        for name, k in harness.EXPERIMENTS.items():
            print(f"{name:<14} {k.summary}")
            print(f"{'':<14} config: {harness.canonical_config_path(name)}")
        return EXIT_OK
    try:
        cfg = _load(args.config, getattr(args, "seeds", None))
        if args.cmd == "validate":
            print(f"ok {cfg.experiment} seeds={len(cfg.seeds)} hash={harness.config_hash(cfg)[:16]}")
            return EXIT_OK
        if args.parallel < 1:
            raise harness.ConfigError("--parallel must be >= 1")
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = harness.run_experiment(cfg, args.parallel)
        man = harness.write_outputs(res, args.out)
    except Exception as e:  # noqa: BLE001 - every simulation failure maps to one exit code
        traceback.print_exc()
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{cfg.experiment}: {len(cfg.seeds)} seed(s) in {res.elapsed_s:.1f} s -> "
          f"{args.out} ({', '.join(man['files'])})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
