"""Per-update cost of the connectivity engines on one large chain, across regimes.

    python3 scripts/benchmark_engines.py --n 10000 --updates 800 --out results/bench.csv
"""
from __future__ import annotations

import argparse
import csv
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from rclab.dynamics import ChainState, apply_update, in_count_trace
from rclab.graph import generate_random_regular
from rclab.model import Configuration, ModelParams, beta_c


@dataclass
class BenchConfig:
    n: int = 10_000
    delta: int = 5
    seed: int = 0
    updates: int = 800
    engines: tuple[str, ...] = ("hdt", "unionfind", "compiled")
    # (q, beta, start)
    regimes: list[tuple[float, float, str]] = field(default_factory=lambda: [
        (100, 2.3, "all-in"), (100, beta_c(100, 5), "all-in"), (10, 2.0, "all-in"),
        (2, 1.0, "all-in"), (100, 1.5, "all-out")])


def time_engine(g, p: ModelParams, x0: Configuration, engine: str, updates: int) -> tuple[float, float, int]:
    if engine == "compiled":
        in_count_trace(g, p, x0, 1, 1, seed=0, engine="compiled")   # jit warm-up
        t0 = time.perf_counter()
        tr = in_count_trace(g, p, x0, updates, updates, seed=1, engine="compiled")
        return 0.0, time.perf_counter() - t0, int(tr[-1])
    t0 = time.perf_counter()
    s = ChainState.create(g, x0, 1, engine)
    setup = time.perf_counter() - t0
    t0 = time.perf_counter()
    for _ in range(updates):
        e, U = s.rng.next_pair(g.m)
        apply_update(s, e, U, p)
    return setup, time.perf_counter() - t0, s.config.in_count


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=BenchConfig.n)
    ap.add_argument("--updates", type=int, default=BenchConfig.updates)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = BenchConfig(n=args.n, updates=args.updates)
    g = generate_random_regular(cfg.n, cfg.delta, seed=cfg.seed)
    rows = []
    for q, beta, start in cfg.regimes:
        p = ModelParams(q=q, beta=beta, delta_deg=cfg.delta)
        x0 = Configuration.all_in(g.m) if start == "all-in" else Configuration.all_out(g.m)
        res = {eng: time_engine(g, p, x0, eng, cfg.updates) for eng in cfg.engines}
        finals = {r[2] for r in res.values()}
        for eng, (setup, run, final) in res.items():
            rows.append({"q": q, "beta": round(beta, 4), "start": start, "engine": eng,
                         "setup_s": round(setup, 4), "update_us": round(1e6 * run / cfg.updates, 2),
                         "final_in_count": final, "agree": len(finals) == 1})
        base = res["unionfind"][1]
        print(f"q={q:<5} beta={beta:.3f} {start:7s} " +
              "  ".join(f"{e}: {1e6 * r[1] / cfg.updates:9.1f} us" for e, r in res.items()) +
              f"   unionfind/hdt = {base / res['hdt'][1]:.1f}x")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        print("config:", {k: v for k, v in asdict(cfg).items() if k != "regimes"})


if __name__ == "__main__":
    main()
