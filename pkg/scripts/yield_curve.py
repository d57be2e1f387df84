"""Expected sales E[Y] against pool mean v at a fixed response probability."""
import argparse
import csv
import sys

import numpy as np

from solicit.planner import yield_curve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=1 / 512)
    ap.add_argument("--v-max", type=float, default=3000.0)
    ap.add_argument("--points", type=int, default=301)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)
    rows = yield_curve(args.p, np.linspace(0.0, args.v_max, args.points))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["param", "value"])
    w.writerows((repr(v), repr(y)) for v, y in rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
