"""Atom-number and density requirements over cloud width and atomic mass.

Rows cover a grid of sigma values for rubidium-87 and ytterbium-174; each row
gives both alpha estimates, both minimum atom numbers and the peak density.
"""

import argparse

import numpy as np

from qgas.feasibility import RB87_MASS, YB174_MASS, PhysicalConfig, alpha_magnitude, minimum_atom_number, peak_density


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sigma-um", type=float, nargs="+", default=[10, 20, 50, 100, 200])
    ap.add_argument("--time-s", type=float, default=1.0)
    ap.add_argument("--reps", type=float, default=1e5)
    args = ap.parse_args()

    head = f"{'atom':>6} {'sigma/um':>9} {'alpha(formula)':>15} {'alpha(kappa)':>13} {'N(formula)':>11} {'N(kappa)':>10} {'peak/cm^-3':>11}"
    print(head)
    for label, mass in (("Rb87", RB87_MASS), ("Yb174", YB174_MASS)):
        for s_um in args.sigma_um:
            s = s_um * 1e-6
            cfg = PhysicalConfig(mass, s, 10 * s, args.time_s, args.reps)
            a = alpha_magnitude(cfg)
            n = minimum_atom_number(cfg)
            dens = peak_density(cfg, n.formula) * 1e-6
            print(f"{label:>6} {s_um:9.3g} {a.formula:15.4e} {a.derived:13.4e} {n.formula:11.3e} {n.derived:10.3e} {dens:11.3e}")
    print(f"alpha(kappa)/alpha(formula) = {1 / np.sqrt(2):.6f} for every row")


if __name__ == "__main__":
    main()
