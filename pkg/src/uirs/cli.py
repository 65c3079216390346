"""Command line entry point.

    uirs run --config <path> [--workers K] [--seed S]
    uirs oracle-check
    uirs --version

Config files are single JSON objects; unknown keys are rejected.  Example::

    {"protocol": "otoc-converge", "n": 3, "S": [1000, 3000, 10000, 20000], "N": 50,
     "t": 1.0, "ising": {"J0": 1, "alpha": 1.5, "B": 1, "Dmax": 1, "disorder_seed": 0},
     "V": {"pauli": "Y", "site": 2}, "W": "IXI", "noise": {"gate_left": 0.0},
     "master_seed": 0, "output_path": "converge.csv"}

Sites are 0-based with qubit 0 leftmost in a Pauli word.  The worker count
defaults to the UIRS_WORKERS environment variable (1 if unset); --workers
overrides it.

Shadow-record files (see ``uirs.simulate.write_shadows``) hold one JSON object
per line: ``gates`` is a list of m layers, each the 2n signed tableau rows of
the Clifford (images of X_0..X_{n-1} then Z_0..Z_{n-1}, e.g. "-XZI");
``outcomes`` is a list of r integers in [0, d); ``probs`` is an optional list
of d exact outcome probabilities.

Gates are drawn uniformly from the full n-qubit Clifford group, not from a
subgroup.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .experiments import ConfigError, ExperimentConfig, run, run_oracle_check


def _print_rows(header, rows):
    print(",".join(header))
    for row in rows:
        print(",".join(str(v) for v in row))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="uirs", description="Random-sequence Clifford protocols for OTOC and unitarity estimation.")
    parser.add_argument("--version", action="version", version=f"uirs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--workers", type=int, default=None, help="worker processes (default: $UIRS_WORKERS or 1)")
    p_run.add_argument("--seed", type=int, default=None, help="override master_seed")

    sub.add_parser("oracle-check", help="run the theory invariant suite")

    args = parser.parse_args(argv)
    if args.command == "oracle-check":
        rows = run_oracle_check()
        for name, status, dev in rows:
            print(f"{status:4s}  {name}  (deviation {dev:.2e})")
        return 0 if all(r[1] == "pass" for r in rows) else 1

    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers: must be at least 1")
    except (OSError, ConfigError) as exc:
        print(f"uirs: error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg, workers=args.workers)
    except OSError as exc:
        print(f"uirs: error: cannot write output: {exc}", file=sys.stderr)
        return 2
    if cfg.protocol == "oracle-check":
        return 0 if all(r[1] == "pass" for r in result["rows"]) else 1
    print(f"wrote {len(result['rows'])} rows to {cfg.output_path}")
    if result["fit"] is not None:
        fit = result["fit"]
        print(f"fit: a={fit['a']:.6g} b={fit['b']:.6g} u={fit['u']:.6g} residual={fit.residual:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
