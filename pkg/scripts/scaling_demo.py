"""Projected mixing time against n on cubic graphs, with a fitted log-log exponent.

    python3 scripts/scaling_demo.py --q 10 --beta-factor 1.5 --out results/demo.json
"""
from __future__ import annotations

import argparse
import json
from dataclasses import dataclass

from rclab.model import ModelParams, beta_c
from rclab.runner import preset_theorem1_demo


@dataclass
class DemoConfig:
    q: float = 10.0
    beta_factor: float = 1.5
    delta: int = 3
    sizes: tuple[int, ...] = (8, 10, 12, 14, 16)
    copies: int = 400
    eta: float = 0.2
    seed: int = 0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=DemoConfig.q)
    ap.add_argument("--beta-factor", type=float, default=DemoConfig.beta_factor,
                    help="beta as a multiple of beta_c(q, delta)")
    ap.add_argument("--copies", type=int, default=DemoConfig.copies)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = DemoConfig(q=args.q, beta_factor=args.beta_factor, copies=args.copies)
    beta = cfg.beta_factor * beta_c(cfg.q, cfg.delta)
    params = ModelParams(q=cfg.q, beta=beta, delta_deg=cfg.delta, eta=cfg.eta)
    rep = preset_theorem1_demo(params, sizes=cfg.sizes, delta=cfg.delta, copies=cfg.copies,
                               seed=cfg.seed)
    print(f"q={rep.q} beta={rep.beta:.4f} beta_c={rep.beta_c:.4f}  ({rep.projection})")
    for r in rep.rows:
        norm = f"{r.steps_per_nlogn:.2f}" if r.steps_per_nlogn is not None else "-"
        print(f"  n={r.n:3d} m={r.m:3d} start={r.start:7s} steps={r.steps}  steps/(n log n)={norm}")
    print(f"fitted exponent of steps in n: {rep.exponent}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rep.as_record(), fh, indent=2)


if __name__ == "__main__":
    main()
