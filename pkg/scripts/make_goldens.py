"""Regenerate tests/golden from closed-form or dense-matrix oracles.

fig4a.csv carries the exact two-spike distribution P(+-N/2) = 1/2 with the
same header the CLI writes; cat_n6.json is U0|N/2> built from scipy expm.
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from qgas import io as qio
from qgas.cli import write_panels
from qgas.dicke import DEFAULT_CONVENTION, DickeKet, m_values
from qgas.distributions import Panel


def fig4a_panel(n: int = 100) -> Panel:
    p = np.zeros(n + 1)
    p[0] = p[-1] = 0.5
    return Panel("FIG4", "a", "P(J_z) at alpha = beta = 0", {"m": m_values(n), "P": p})


def dense_cat(n: int) -> DickeKet:
    j = n / 2
    m = m_values(n)
    jp = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), -1)
    jx = 0.5 * (jp + jp.T)
    rot = expm(0.5j * np.pi * jx)
    u0 = rot @ np.diag(np.exp(0.25j * np.pi * m**2)) @ rot
    e = np.zeros(n + 1)
    e[-1] = 1
    return DickeKet(n, u0 @ e)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", type=Path, default=Path(__file__).resolve().parents[1] / "tests" / "golden")
    args = ap.parse_args()
    overrides = {"convention": DEFAULT_CONVENTION, "fd_check": False}
    # same config document as `qgas reproduce fig4`, so the header hash matches
    write_panels([fig4a_panel()], args.dir, {"n": 100, "overrides": overrides}, DEFAULT_CONVENTION, 100)
    qio.write_json(args.dir / "cat_n6.json", dense_cat(6).to_json())
    print(f"wrote goldens to {args.dir}")


if __name__ == "__main__":
    main()
