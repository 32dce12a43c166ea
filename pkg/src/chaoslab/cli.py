"""Command line: ``chaoslab run <config>``, ``chaoslab selftest``, ``chaoslab oracle <name>``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config


def _run(args) -> int:
    from .experiments import run_experiment, write_outputs

    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg = cfg.replace(workers=args.workers)
        if args.output is not None:
            cfg = cfg.replace(output=args.output)
    except (ConfigError, OSError) as exc:
        print(f"config error in {args.config}:\n{exc}", file=sys.stderr)
        return 2
    try:
        rows, diags = run_experiment(cfg)
    except (ValueError, ConfigError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 3
    csv_path, side = write_outputs(cfg, rows, diags)
    print(f"wrote {csv_path} ({len(rows)} rows) and {side}")
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(cases=args.cases, seed=args.seed)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return 1 if failed else 0


def _oracle(args) -> int:
    from .oracles import ORACLES, run_oracle

    if args.name == "list":
        for k, v in ORACLES.items():
            print(f"{k:16s} {v}")
        return 0
    try:
        lines = run_oracle(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaoslab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=None, help="override the config worker count")
    r.add_argument("--output", default=None, help="override the config output path")
    r.set_defaults(func=_run)
    s = sub.add_parser("selftest", help="run the exact-algebra and spectral invariant suites")
    s.add_argument("--cases", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_selftest)
    o = sub.add_parser("oracle", help="print brute-force reference values ('list' for names)")
    o.add_argument("name")
    o.set_defaults(func=_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
