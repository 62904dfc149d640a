"""Command-line entry point.

Subcommands:
  run             one configured experiment, full artifact bundle
  sweep           Cartesian sweep over the config's [sweep] axes
  verify-barriers residual-sign certification of all closed-form barriers
  check-energy    energy-identity audit along a configured run

Exit code is 0 iff every asserted invariant passed.
"""

from __future__ import annotations

import argparse
import json
import sys

from kslab import experiments


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslab")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment INI file")
        p.add_argument("--out-dir", required=True, help="artifact output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seedless", action="store_true", default=True,
                       help="no randomness in the core path (always on)")

    common(sub.add_parser("run", help="execute one experiment"))
    common(sub.add_parser("sweep", help="run the config's sweep axes"))
    vb = sub.add_parser("verify-barriers", help="certify barrier residual signs")
    common(vb, needs_config=False)
    vb.add_argument("--n", type=int, required=True, help="space dimension")
    common(sub.add_parser("check-energy", help="audit the energy identity"))
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        cfg = experiments.load_config(args.config)
        summary = experiments.run_experiment(cfg, args.out_dir)
        print(json.dumps(summary["invariants"], indent=2, sort_keys=True))
        print(f"verdict: {summary['verdict']}")
        return 0 if summary["all_invariants_pass"] else 1
    if args.command == "sweep":
        cfg = experiments.load_config(args.config)
        rows = experiments.sweep(cfg, args.out_dir, threads=args.threads)
        for row in rows:
            print(row)
        return 0
    if args.command == "verify-barriers":
        report = experiments.verify_barriers(args.n, args.out_dir)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0 if report["all_ok"] else 1
    if args.command == "check-energy":
        cfg = experiments.load_config(args.config)
        report = experiments.check_energy(cfg, args.out_dir)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0 if report["all_ok"] else 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
