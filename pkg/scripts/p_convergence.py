"""p-convergence of Test 1 on a fixed Voronoi mesh."""
import argparse
import logging

import numpy as np

from elastoacoustic.cli import RATE_COLUMNS
from elastoacoustic.output import write_csv
from elastoacoustic.scenarios import get_scenario
from elastoacoustic.studies import p_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--elements", type=int, default=300)
    ap.add_argument("--degrees", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="rates_p.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    tab = p_study(get_scenario("test1"), args.degrees, args.elements, args.dt, args.T, args.seed)
    cols = RATE_COLUMNS[1:]
    print(f"{'p':>3} {'dofs':>7} " + " ".join(f"{c:>12}" for c in cols))
    for r in tab.rows:
        print(f"{r['p']:3d} {r['dofs']:7d} " + " ".join(f"{r[c]:12.4e}" for c in cols))
    for c in cols:
        e = np.array([r[c] for r in tab.rows])
        print(f"{c}: successive ratios {np.round(e[:-1] / e[1:], 2).tolist()}")
    write_csv(args.out, ("p",) + RATE_COLUMNS, [[r["p"]] + [r[c] for c in RATE_COLUMNS] for r in tab.rows])


if __name__ == "__main__":
    main()
