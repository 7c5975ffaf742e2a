"""Run named presets (default: all of them) into results/<preset>.

    python3 scripts/run_presets.py phase-scan wsm-curve --workers 2
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rclab.runner import PRESETS, run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=sorted(PRESETS))
    ap.add_argument("--root", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    worst = 0
    for name in args.names:
        if name not in PRESETS:
            print(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", file=sys.stderr)
            return 2
        res = run(PRESETS[name](), Path(args.root) / name, workers=args.workers,
                  log=lambda msg: print(f"  {msg}", file=sys.stderr))
        print(f"{name}: exit {res.exit_code}, {len(res.warnings)} warnings -> {res.out_dir}")
        worst = max(worst, res.exit_code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
