"""Profit surface F(v, w) on a grid, from an economics section in a JSON config.

Writes ``v,w,profit`` rows and reports the grid optimum on stderr.
"""
import argparse
import csv
import json
import sys

import numpy as np

from solicit.planner import Economics, optimize_profit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/plan_profit.json")
    ap.add_argument("--v-max", type=float, default=3000.0)
    ap.add_argument("--v-points", type=int, default=61)
    ap.add_argument("--w-min", type=float, default=1.0)
    ap.add_argument("--w-max", type=float, default=20.0)
    ap.add_argument("--w-points", type=int, default=77)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)
    with open(args.config) as fh:
        econ = Economics.from_dict(json.load(fh)["economics"])
    res = optimize_profit(
        econ,
        np.linspace(0.0, args.v_max, args.v_points),
        np.linspace(args.w_min, args.w_max, args.w_points),
        workers=args.workers,
    )
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["v", "w", "profit"])
    w.writerows((repr(v), repr(w_), repr(f)) for v, w_, f in res.surface)
    if args.out:
        fh.close()
    print(f"optimum v={res.chosen['v']:g} w={res.chosen['w']:g} p={res.chosen['p']:.6g} profit={res.profit:.6g}", file=sys.stderr)


if __name__ == "__main__":
    main()
