"""End-to-end acceptance checks.

Each test prints exactly one ``[PASS]``/``[FAIL]`` line naming its criterion;
the lines are repeated in the pytest terminal summary.  Run alone with
``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from conftest import dense_probabilities, random_ket
from qgas.channels import (
    DephasingSpec,
    ExperimentConfig,
    GravityParams,
    TwistingSpec,
    dephase,
    dephasing_eigenvalues,
    oat_prepare,
    preparation_unitary,
    recombiner_unitary,
    run_experiment,
)
from qgas.dicke import (
    DEFAULT_CONVENTION,
    JZ_CONVENTIONS,
    cat_state_analytic,
    fidelity,
    m_values,
    optimal_state,
    polarized_state,
    rotation_x,
)
from qgas.distributions import figure_data
from qgas.feasibility import (
    REFERENCE_N_MIN,
    PhysicalConfig,
    kappa_gaussian_analytic,
    kappa_monte_carlo,
    minimum_atom_number,
    scaling_separation,
)
from qgas.fisher import (
    ALL_PARAMS,
    cfi_for_config,
    prob_derivatives_analytic,
    prob_derivatives_fd,
    qfi_parameters,
    with_offsets,
)

RESULTS: list[str] = []
AB = ("alpha", "beta")


class Checks:
    """Sub-checks of one criterion, folded into a single report line."""

    def __init__(self, criterion: int, title: str):
        self.criterion, self.title = criterion, title
        self.items: list[tuple[str, bool, str]] = []
        self.start = time.perf_counter()

    def add(self, label: str, ok, detail: str = "") -> None:
        self.items.append((label, bool(ok), detail))

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def finish(self) -> None:
        ok = all(item[1] for item in self.items)
        parts = [f"{label}={'ok' if good else 'FAIL'}" + (f"[{d}]" if d else "") for label, good, d in self.items]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.criterion} {self.title}: " + "; ".join(parts)
        line += f" ({self.elapsed:.2f}s)"
        print(line)
        RESULTS.append(line)
        failed = [label for label, good, _ in self.items if not good]
        assert not failed, f"criterion {self.criterion} failed sub-checks: {failed}"


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_optimal_state_qfi():
    c = Checks(1, "optimal-state QFI exact")
    for n in (4, 10, 50, 100, 500):
        f = qfi_parameters(optimal_state(n), AB)
        e_aa = rel(f["alpha", "alpha"], n**4 / 4)
        e_ab = abs(f["alpha", "beta"]) / n**4
        c.add(f"N={n}", e_aa < 1e-9 and e_ab < 1e-9, f"rel {e_aa:.1e}, |F_ab|/N^4 {e_ab:.1e}")
    c.add("runtime<1s", c.elapsed < 1, f"{c.elapsed:.3f}s")
    c.finish()


def test_criterion_2_beta_convention():
    c = Checks(2, "F_beta_beta convention adjudication")
    passing, worst = [], {}
    for conv in sorted(JZ_CONVENTIONS):
        errs = []
        for n in (50, 100, 200):
            errs.append(rel(qfi_parameters(optimal_state(n), AB, conv)["beta", "beta"], 2 * n**2))
            errs.append(rel(qfi_parameters(cat_state_analytic(n), AB, conv)["beta", "beta"], 2 * (n**2 + n)))
        worst[conv] = max(errs)
        if worst[conv] < 1e-9:
            passing.append(conv)
    detail = ", ".join(f"{k} max rel {v:.1e}" for k, v in worst.items())
    c.add("exactly one convention matches", len(passing) == 1, f"{','.join(passing) or 'none'}; {detail}")
    c.add("default is the matching one", passing == [DEFAULT_CONVENTION], DEFAULT_CONVENTION)
    c.finish()


def test_criterion_3_cat_state():
    c = Checks(3, "OAT cat construction")
    for n in (4, 10, 100):
        f = fidelity(oat_prepare(polarized_state(n)), cat_state_analytic(n))
        c.add(f"fidelity N={n}", f >= 1 - 1e-10, f"1-F {1 - f:.1e}")
    ns = np.arange(20, 201, 20)
    deficit = np.array([n**4 / 4 - qfi_parameters(cat_state_analytic(n), AB)["alpha", "alpha"] for n in ns])
    slope = np.polyfit(np.log(ns), np.log(deficit), 1)[0]
    c.add("deficit>0", np.all(deficit > 0), f"min {deficit.min():.3g}")
    c.add("slope in [2.5,3.5]", 2.5 <= slope <= 3.5, f"{slope:.3f}")
    c.finish()


def test_criterion_4_qcrb_saturation():
    c = Checks(4, "CFI = QFI with U0^dagger")
    for n in (10, 50, 100):
        cfg = with_offsets(ExperimentConfig(n), AB)
        cfi = cfi_for_config(cfg, AB).values
        qfi = qfi_parameters(oat_prepare(polarized_state(n)), AB).values
        err = np.abs(cfi - qfi).max() / np.abs(qfi).max()
        c.add(f"N={n}", err < 1e-6, f"rel {err:.1e}")
    c.add("runtime<10s", c.elapsed < 10, f"{c.elapsed:.3f}s")
    c.finish()


def test_criterion_5_decoupling():
    c = Checks(5, "decoherence decoupling at N=100")
    n = 100
    dagger = with_offsets(ExperimentConfig(n), ALL_PARAMS)
    pd = prob_derivatives_analytic(dagger, ALL_PARAMS)
    a, d = pd.column("alpha"), pd.column("delta_A")
    cos = float(a @ d / (np.linalg.norm(a) * np.linalg.norm(d)))
    c.add("U0^dagger cos(dP/dalpha, dP/ddelta_A)>0.99", cos > 0.99, f"{cos:.5f}")
    u0 = with_offsets(ExperimentConfig(n, recombiner="U0"), ALL_PARAMS)
    f = cfi_for_config(u0, ALL_PARAMS).values
    ratio = 1 / np.linalg.inv(f)[0, 0] / f[0, 0]
    c.add("U0 1/[F^-1]_aa >= 0.99 F_aa", ratio >= 0.99, f"{ratio:.7f}")
    c.finish()


def test_criterion_6_figures():
    c = Checks(6, "figure reproduction")
    n = 100
    fig3, fig4 = figure_data("FIG3", n), figure_data("FIG4", n)
    m = m_values(n)
    p3a = fig3[0].columns["P"]
    c.add("fig3a P(N/2)=1", abs(p3a[-1] - 1) < 1e-10, f"{abs(p3a[-1] - 1):.1e}")
    b = fig3[1].columns["dP_dalpha"]
    c.add("fig3b min at N/2, max at -N/2", m[np.argmin(b)] == n / 2 and m[np.argmax(b)] == -n / 2)
    cc = fig3[2].columns["dP_dbeta"]
    inner = np.abs(m) <= n / 4
    l1 = np.abs(cc[inner]).sum() / np.abs(cc).sum()
    c.add("fig3c L1 mass within |m|<=N/4 >95%", l1 > 0.95, f"{l1:.4f}")
    pos = np.clip(cc, 0, None)
    c.add("fig3c positive lobe within |m|<=N/4", pos[inner].sum() / pos.sum() > 0.95, f"{pos[inner].sum() / pos.sum():.7f}")
    p4a = fig4[0].columns["P"]
    top2 = sorted(m[np.argsort(p4a)[-2:]])
    c.add("fig4a bimodal at +-N/2", top2 == [-n / 2, n / 2] and p4a[[0, -1]].sum() > 1 - 1e-10)
    for panel in fig3[1:] + fig4[1:]:
        (col,) = [k for k in panel.columns if k != "m"]
        values = panel.columns[col]
        s = float(values.sum())
        c.add(f"fig{panel.figure[-1]}{panel.panel} sum=0", abs(s) < 1e-12, f"{s:.1e}, {abs(s) / np.abs(values).max():.0e} of peak")
    c.finish()


def test_criterion_7_feasibility():
    c = Checks(7, "feasibility")
    rb = PhysicalConfig.rubidium()
    n_min = minimum_atom_number(rb).formula
    c.add("N_min within 2x of 5e9", REFERENCE_N_MIN / 2 <= n_min <= 2 * REFERENCE_N_MIN, f"{n_min:.3e}")
    mc = kappa_monte_carlo(rb, "a", "a", samples=10_000_000, seed=0)
    exact = kappa_gaussian_analytic(rb, "a", "a")
    z = abs(mc.value - exact) / mc.stderr
    c.add("Monte Carlo kappa within 3 SE", z < 3, f"{z:.2f} SE")
    sig = np.logspace(-5, -4, 11)
    rows = scaling_separation(rb, sig)
    g = np.polyfit(np.log(sig), np.log([r.gravity_coeff for r in rows]), 1)[0]
    k = np.polyfit(np.log(sig), np.log([r.contact_coeff for r in rows]), 1)[0]
    c.add("slopes -1/-3", abs(g + 1) < 1e-10 and abs(k + 3) < 1e-10, f"{g:.12f}, {k:.12f}")
    c.finish()


def _max_rel_psd_violation(mat):
    scale = max(np.abs(mat).max(), 1e-300)
    return -min(np.linalg.eigvalsh(mat).min(), 0) / scale


def test_criterion_8_property_suites():
    c = Checks(8, "property suites")
    rng = np.random.default_rng(8)

    worst = 0.0
    for n in (2, 10, 50):
        spec = TwistingSpec(rng.uniform(0, np.pi))
        for u in (rotation_x(n, rng.uniform(-5, 5)), preparation_unitary(n, spec), recombiner_unitary(n, spec, "U0")):
            worst = max(worst, np.abs(u.conj().T @ u - np.eye(n + 1)).max())
    c.add("unitarity", worst < 1e-10, f"{worst:.1e}")

    worst = 0.0
    for n in (3, 10, 40):
        cfg = ExperimentConfig(n, TwistingSpec(0.7), GravityParams(*rng.uniform(-1, 1, 3)))
        cfg = cfg.with_dephasing("A", 0.01).with_dephasing("Jz", 0.3)
        worst = max(worst, abs(run_experiment(cfg, random_ket(rng, n)).trace() - 1))
    c.add("trace preservation", worst < 1e-12, f"{worst:.1e}")

    psd, below = 0.0, 0.0
    for n in (6, 20, 50):
        for rec in ("U0", "U0_DAGGER"):
            cfg = ExperimentConfig(n, TwistingSpec(np.pi / 4), GravityParams(*rng.uniform(0, 0.05, 2)), recombiner=rec)
            cfi = cfi_for_config(cfg, AB).values
            qfi = qfi_parameters(oat_prepare(polarized_state(n)), AB).values
            psd = max(psd, _max_rel_psd_violation(cfi))
            below = max(below, _max_rel_psd_violation(qfi - cfi))
            noisy = cfg.with_dephasing("A", 1e-4).with_dephasing("Jz", 1e-3)
            psd = max(psd, _max_rel_psd_violation(cfi_for_config(noisy, ALL_PARAMS).values))
    c.add("Fisher PSD", psd < 1e-9, f"{psd:.1e}")
    c.add("CFI <= QFI", below < 1e-9, f"{below:.1e}")

    worst = 0.0
    for n in (4, 10):
        for rec in ("U0", "U0_DAGGER"):
            cfg = ExperimentConfig(n, TwistingSpec(np.pi / 4), GravityParams(0.02, 0.03), recombiner=rec)
            cfg = cfg.with_dephasing("A", 1e-4).with_dephasing("Jz", 1e-3)
            exact = prob_derivatives_analytic(cfg, ALL_PARAMS)
            for p, step in (("alpha", 1e-7), ("beta", 1e-7), ("delta_A", 1e-8), ("delta_Jz", 1e-8)):
                fd = prob_derivatives_fd(cfg, (p,), step=step).column(p)
                col = exact.column(p)
                worst = max(worst, np.abs(fd - col).max() / max(1.0, np.abs(col).max()))
    c.add("analytic vs FD", worst < 1e-7, f"{worst:.1e}")

    rho = random_ket(rng, 12).to_density()
    ident = max(np.abs(dephase(rho, DephasingSpec(g, 0.0)).matrix - rho.matrix).max() for g in ("A", "Jz"))
    c.add("delta=0 identity", ident == 0, f"{ident:.1e}")
    worst = 0.0
    for g in ("A", "Jz"):
        lam = dephasing_eigenvalues(g, 12)
        out = dephase(rho, DephasingSpec(g, 1e3)).matrix
        coherent = lam[:, None] != lam[None, :]
        worst = max(worst, np.abs(out[coherent]).max(), np.abs(np.diag(out) - np.diag(rho.matrix)).max())
    c.add("delta->inf diagonal", worst < 1e-12, f"{worst:.1e}")

    worst = 0.0
    base = dict(chi=np.pi / 4, alpha=0.03, beta=0.05, da=0.002, dj=0.01)
    h = 1e-4
    for n in (2, 3, 4):
        for rec in ("U0", "U0_DAGGER"):
            probs = dense_probabilities(n, recombiner=rec, **base)
            rows = []
            for key in ("alpha", "beta", "da", "dj"):
                f = {s: dense_probabilities(n, recombiner=rec, **{**base, key: base[key] + s * h}) for s in (-2, -1, 1, 2)}
                rows.append((f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h))
            rows = np.array(rows)
            oracle = (rows / probs) @ rows.T
            cfg = ExperimentConfig(n, TwistingSpec(np.pi / 4), GravityParams(0.03, 0.05), recombiner=rec)
            cfg = cfg.with_dephasing("A", 0.002).with_dephasing("Jz", 0.01)
            worst = max(worst, np.abs(cfi_for_config(cfg).values - oracle).max() / np.abs(oracle).max())
    c.add("brute-force CFI N=2,3,4", worst < 1e-8, f"{worst:.1e}")

    c.add("runtime<60s", c.elapsed < 60, f"{c.elapsed:.2f}s")
    c.finish()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
