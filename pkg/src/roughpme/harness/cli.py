"""Command line entry point: ``roughpme run|list-experiments|describe``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS, describe_experiment, run_experiment


def _parser():
    p = argparse.ArgumentParser(prog="roughpme", description="Run numerical experiment suites.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by an INI file")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--threads", type=int, default=None)
    sub.add_parser("list-experiments", help="list experiment names")
    d = sub.add_parser("describe", help="show an experiment's purpose and default config")
    d.add_argument("experiment")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0
    if args.command == "describe":
        try:
            print(describe_experiment(args.experiment))
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads, out=args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code, summary = run_experiment(cfg)
    if "error" in summary:
        print(f"error: {summary['error']}", file=sys.stderr)
    for a in summary.get("assertions", []):
        flag = "PASS" if a["passed"] else "FAIL"
        print(f"{flag} {a['name']}: {a['measured']:.6g} {a['relation']} {a['bound']:.6g} ({a['source']})")
    print(json.dumps({"experiment": cfg.name, "exit_code": code}))
    return code


if __name__ == "__main__":
    sys.exit(main())
