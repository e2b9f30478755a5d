"""How far the OAT cat state falls short of the optimal-state QFI as N grows.

Prints N, F_alpha_alpha, the deficit N^4/4 - F_alpha_alpha, deficit / N^3,
F_beta_beta against 2(N^2 + N), and the fitted log-log slope of the deficit.
"""

import argparse
from pathlib import Path

import numpy as np

from qgas import io as qio
from qgas.dicke import DEFAULT_CONVENTION, cat_state_analytic
from qgas.fisher import qfi_parameters


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=list(range(20, 401, 20)))
    ap.add_argument("--convention", default=DEFAULT_CONVENTION)
    ap.add_argument("--csv", type=Path, help="also write the table here")
    args = ap.parse_args()
    if any(n % 2 for n in args.n):
        ap.error("the cat state needs even N")

    ns = np.array(args.n)
    rows = []
    print(f"{'N':>5} {'F_aa':>16} {'deficit':>12} {'deficit/N^3':>12} {'F_bb/2(N^2+N)':>14}")
    for n in ns:
        f = qfi_parameters(cat_state_analytic(int(n)), ("alpha", "beta"), args.convention)
        deficit = n**4 / 4 - f["alpha", "alpha"]
        bb = f["beta", "beta"] / (2 * (n**2 + n))
        rows.append((n, f["alpha", "alpha"], deficit, deficit / n**3, bb))
        print(f"{n:5d} {f['alpha', 'alpha']:16.6g} {deficit:12.6g} {deficit / n**3:12.6f} {bb:14.12f}")
    table = np.array(rows, dtype=float)
    slope = np.polyfit(np.log(table[:, 0]), np.log(table[:, 2]), 1)[0]
    print(f"log-log slope of deficit: {slope:.4f}")
    if args.csv:
        cols = dict(zip(["n", "F_alpha_alpha", "deficit", "deficit_over_n3", "F_beta_beta_ratio"], table.T))
        qio.write_csv(args.csv, cols, {"convention": args.convention, "slope": f"{slope:.6f}"})


if __name__ == "__main__":
    main()
