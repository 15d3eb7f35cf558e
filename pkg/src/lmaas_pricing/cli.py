"""Command-line entry point: ``lmaas-bench run | list-experiments | validate``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import BUILTIN_EXPERIMENTS, resolve_spec, run, write_outputs
from .exceptions import ValidationError

logger = logging.getLogger("lmaas_pricing")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="lmaas-bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment sweep and write CSV results")
    p_run.add_argument("--spec", required=True,
                       help="path to an ExperimentSpec JSON file or a built-in experiment name")
    p_run.add_argument("--out", help="output directory (default: spec output_path or '.')")
    p_run.add_argument("--seed", type=int, help="override the spec seed")
    p_run.add_argument("--parallel", type=int, default=1, metavar="K",
                       help="number of worker processes for sweep cells")
    p_run.add_argument("--oracle", action="store_true",
                       help="cross-check RSR against the brute-force oracle where it fits")
    p_run.add_argument("--trace", action="store_true",
                       help="also write per-run traces as line-delimited JSON")

    p_list = sub.add_parser("list-experiments", help="list built-in experiments")
    p_list.add_argument("--dump", metavar="DIR", help="write each built-in spec as JSON into DIR")

    p_val = sub.add_parser("validate", help="validate an ExperimentSpec without running it")
    p_val.add_argument("--spec", required=True)
    return parser


def _cmd_run(args):
    try:
        spec = resolve_spec(args.spec)
        if args.seed is not None:
            spec = type(spec).from_dict({**spec.to_dict(), "seed": args.seed})
    except ValidationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or (str(Path(spec.output_path).parent) if spec.output_path else ".")
    rows, traces, checks = run(spec, parallel=max(1, args.parallel), oracle=args.oracle)
    try:
        paths = write_outputs(spec, rows, traces, checks, out_dir, write_trace=args.trace)
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    failed = [r for r in rows if r["status"] != "ok"]
    mismatched = [c for c in checks if not c["match"]]
    for row in failed:
        logger.error("%s @ %s: %s", row["algorithm"], row["sweep_value"], row["status"])
    for check in mismatched:
        logger.error("oracle mismatch @ %s: rel diff %.3g", check["sweep_value"], check["rel_diff"])
    return EXIT_SOLVER if failed or mismatched else EXIT_OK


def _cmd_list(args):
    for name, spec in BUILTIN_EXPERIMENTS.items():
        print(f"{name}\t{spec['description']}")
    if args.dump:
        out = Path(args.dump)
        out.mkdir(parents=True, exist_ok=True)
        for name, spec in BUILTIN_EXPERIMENTS.items():
            (out / f"{name}.json").write_text(json.dumps(spec, indent=2) + "\n")
    return EXIT_OK


def _cmd_validate(args):
    try:
        spec = resolve_spec(args.spec)
    except ValidationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{spec.name}: ok ({len(spec.sweep_values)} cells x {len(spec.algorithms)} algorithms)")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "list-experiments": _cmd_list, "validate": _cmd_validate}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
