"""Compare the two recombiners as the evaluation offset and N vary.

For each (recombiner, N, offset) the four-parameter CFI matrix is built at
alpha = beta = delta_A = delta_Jz = offset, and the script reports
1/[F^-1]_aa / F_aa together with the largest |correlation| of alpha with a
nuisance parameter.  Values near 1 and 0 mean alpha is estimable on its own.
Offsets much above 1/(delta A)^2 ~ 16/N^4 dephase the state completely.
"""

import argparse

import numpy as np

from qgas.channels import ExperimentConfig
from qgas.fisher import ALL_PARAMS, SingularFisherError, cfi_for_config, crb_invert, decoupling_report, with_offsets


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[20, 50, 100])
    ap.add_argument("--offsets", type=float, nargs="+", default=[1e-10, 1e-9, 1e-8])
    args = ap.parse_args()

    print(f"{'recombiner':>10} {'N':>4} {'offset':>8} {'F_aa':>12} {'ratio':>10} {'max|corr|':>10}")
    for rec in ("U0", "U0_DAGGER"):
        for n in args.n:
            for off in args.offsets:
                cfg = with_offsets(ExperimentConfig(n, recombiner=rec), ALL_PARAMS, off)
                f = cfi_for_config(cfg, ALL_PARAMS)
                try:
                    crb_invert(f)
                    rows = decoupling_report(cfg, ALL_PARAMS, fisher=f)
                    ratio = 1 / np.linalg.inv(f.values)[0, 0] / f.values[0, 0]
                    corr = max(abs(r.correlation) for r in rows)
                    print(f"{rec:>10} {n:4d} {off:8.0e} {f.values[0, 0]:12.5g} {ratio:10.6f} {corr:10.3g}")
                except SingularFisherError:
                    print(f"{rec:>10} {n:4d} {off:8.0e} {f.values[0, 0]:12.5g} {'singular':>10} {'-':>10}")


if __name__ == "__main__":
    main()
