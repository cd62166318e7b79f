"""h-convergence of Test 1 or Test 2 at fixed degree; prints the rate table and writes a CSV."""
import argparse
import logging

from elastoacoustic.cli import RATE_COLUMNS
from elastoacoustic.output import write_csv
from elastoacoustic.scenarios import get_scenario
from elastoacoustic.studies import h_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="test1", choices=["test1", "test2"])
    ap.add_argument("--elements", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="rates_h.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    tab = h_study(get_scenario(args.scenario), args.elements, args.degree, args.dt, args.T, args.seed)
    print(f"{'h':>10} {'dofs':>7} " + " ".join(f"{c:>12}" for c in RATE_COLUMNS[1:]))
    for r in tab.rows:
        print(f"{r['h']:10.4f} {r['dofs']:7d} " + " ".join(f"{r[c]:12.4e}" for c in RATE_COLUMNS[1:]))
    print(tab.summary())
    write_csv(args.out, ("h",) + RATE_COLUMNS, [[r["h"]] + [r[c] for c in RATE_COLUMNS] for r in tab.rows])


if __name__ == "__main__":
    main()
