"""Final error and saturation count as the DoS duty cycle grows.

    python scripts/resilience_sweep.py --seeds 5 --out sweep.csv
"""

import argparse
import csv
import time

import numpy as np

from nesh.dos import average_rates, generate, resilience_ratio
from nesh.game import DEFAULT_X0, default_game
from nesh.sim import make_context, run
from nesh.topology import Topology
from nesh.tuner import synthesize

DUTIES = (0.0, 0.5, 0.8, 0.9, 0.95, 0.98, 0.99)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--steps", type=int, default=150_000)
    ap.add_argument("--period", type=float, default=30.0, help="mean DoS cycle length [s]")
    ap.add_argument("--delta-seconds", type=float, default=0.01)
    ap.add_argument("--out", default="resilience_sweep.csv")
    args = ap.parse_args()

    game, topo = default_game(), Topology.preset("cycle", 5)
    design = synthesize(game, topo, c_x0=float(np.max(np.abs(DEFAULT_X0))))
    ctx = make_context(game, topo, design)
    horizon = args.steps * args.delta_seconds

    with open(args.out, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["duty", "seed", "ratio", "initial_err", "final_err",
                      "saturation_events", "max_qarg_x", "max_qarg_y", "seconds"])
        for duty in DUTIES:
            finals = []
            for seed in range(args.seeds):
                trace = generate(duty, args.period, horizon, seed)
                ratio = resilience_ratio(*average_rates(trace), args.delta_seconds)
                t0 = time.perf_counter()
                s = run(ctx, trace, args.delta_seconds, args.steps, DEFAULT_X0).summary
                out.writerow([duty, seed, ratio, s["initial_err_ne"], s["final_err_ne"],
                              s["saturation_events"], s["max_qarg_x"], s["max_qarg_y"],
                              round(time.perf_counter() - t0, 2)])
                finals.append(s["final_err_ne"])
            print(f"duty {duty:.2f}: median final error {np.median(finals):.3e}")
    print(f"rows written to {args.out}")


if __name__ == "__main__":
    main()
