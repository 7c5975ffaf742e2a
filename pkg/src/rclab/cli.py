"""``rclab <spec.toml|spec.json|preset:NAME> [--out DIR] [--workers N] [--verbose]``"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .runner import EXIT_CONFIG, PRESETS, SpecError, load_spec, run


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(
        prog="rclab",
        description="Run one random-cluster experiment spec.  Everything that affects results "
                    "lives in the spec; flags only pick the spec, the output directory, the "
                    "worker count and verbosity.",
        epilog="presets: " + ", ".join(sorted(PRESETS)))
    ap.add_argument("spec", help="TOML or JSON spec file, or preset:NAME")
    ap.add_argument("--out", default=None, help="output directory (default: the spec's 'output')")
    ap.add_argument("--workers", type=int, default=1, help="worker processes across grid points")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    try:
        spec = load_spec(args.spec)
    except (SpecError, OSError) as exc:
        print(f"rclab: spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run(spec, args.out, workers=max(1, args.workers), verbose=args.verbose,
                     log=lambda msg: print(msg, file=sys.stderr))
    except SpecError as exc:
        print(f"rclab: spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in result.warnings:
        if args.verbose or w["kind"] != "cap_exceeded":
            print(f"rclab: warning: {w}", file=sys.stderr)
    print(result.out_dir / "run-manifest.json")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
