"""``otpb`` command-line front end."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import EXIT_OK, EXIT_USAGE, SCHEMAS, ExperimentSpec, exit_code_for, run_experiment
from .protocol import parse_key_values


def _defaults_epilog() -> str:
    lines = ["experiments and their parameters (defaults in brackets):"]
    for name, schema in SCHEMAS.items():
        lines.append(f"  {name}")
        for key, p in schema.items():
            lines.append(f"    {key:<16} [{p.default!r}] {p.doc}")
    lines.append("")
    lines.append("exit codes: 0 ok, 2 bad experiment or parameters, 3 numerical failure, 4 I/O failure")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="otpb", description="Reproduce data tables and run key-distribution sessions.",
        epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("experiment", help="one of: " + ", ".join(SCHEMAS))
    ap.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="override a parameter (repeatable)")
    ap.add_argument("--seed", type=int, default=None, help="seed for all randomness [1]")
    ap.add_argument("--out", default=None, help="output CSV path [<experiment>.csv]")
    ap.add_argument("--config", default=None, metavar="PATH",
                    help="file of key=value lines; --param entries take precedence")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        overrides = {}
        if args.config:
            overrides.update(parse_key_values(Path(args.config).read_text()))
        overrides.update(parse_key_values("\n".join(args.param)))
    except ValueError as exc:
        print(f"otpb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"otpb: cannot read config: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    seed = overrides.pop("seed", 1) if args.seed is None else args.seed
    overrides.pop("seed", None)
    try:
        seed = int(seed)
    except ValueError:
        print(f"otpb: bad seed {seed!r}", file=sys.stderr)
        return EXIT_USAGE
    spec = ExperimentSpec(args.experiment, overrides, args.out or f"{args.experiment}.csv", seed)
    try:
        result = run_experiment(spec)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == 1:
            raise
        print(f"otpb: {exc}", file=sys.stderr)
        return code
    print(result.summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
