"""Command-line harness.

    qchaos <experiment> [--n 7 --L 1 --epsilon 0.01 --seed 42 --out DIR
                         --preset full|reduced --config FILE --set KEY=VALUE ...]

Experiments: fig1 fig2 fig3 fig4 scaling-fidelity scaling-gamma
localization verify.  A config file holds key=value lines (a previous
run's manifest.txt works as is); command-line flags win over the file.
Exit codes: 0 success, 2 verification failure, 3 resource limit.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import DEFAULTS, ResourceLimitError, resolve_config, run_experiment
from .outputs import read_config_file

_FLAG_PARAMS = ["n", "L", "epsilon", "seed", "preset", "K", "a", "hbar", "t",
                "realizations", "topology", "n_sys", "delta"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qchaos",
        description="quantum simulation experiments for chaotic maps and static imperfections",
    )
    parser.add_argument("experiment", choices=sorted(DEFAULTS))
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--config", default=None, help="key=value file; flags override it")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        dest="assignments", help="set any experiment parameter")
    for name in _FLAG_PARAMS:
        parser.add_argument(f"--{name}", default=None)
    return parser


def gather_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if args.config:
        overrides.update(read_config_file(args.config))
    for pair in args.assignments:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    for name in _FLAG_PARAMS:
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = gather_overrides(args)
        summary = run_experiment(args.experiment, overrides, args.out)
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.experiment == "verify":
        for check in summary["checks"]:
            status = "PASS" if check.ok else "FAIL"
            print(f"{status:4s} {check.name}: {check.measured} (expected {check.expected})")
        from .verification import gate_count_table

        for line in gate_count_table():
            print(line)
        if summary["failures"]:
            print(f"{len(summary['failures'])} verification check(s) failed")
            return 2
        print("all verification checks passed")
        return 0

    for key in sorted(summary):
        value = summary[key]
        if isinstance(value, (int, float, str)) or value is None:
            print(f"{key} = {value}")
    print(f"outputs written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
