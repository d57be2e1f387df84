"""Expected sales E[Y] against response probability p (log-spaced) at a fixed pool mean."""
import argparse
import csv
import sys

import numpy as np

from solicit.planner import response_curve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--v", type=float, default=1000.0)
    ap.add_argument("--p-min", type=float, default=2.0**-10)
    ap.add_argument("--p-max", type=float, default=2.0**-8)
    ap.add_argument("--points", type=int, default=129)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)
    rows = response_curve(args.v, np.geomspace(args.p_min, args.p_max, args.points))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["param", "value"])
    w.writerows((repr(p), repr(y)) for p, y in rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
