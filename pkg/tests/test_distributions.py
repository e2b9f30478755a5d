from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_ket
from qgas import io as qio
from qgas.channels import DephasingSpec, ExperimentConfig, dephase, interrogate
from qgas.dicke import (
    DickeKet,
    cat_state_analytic,
    css_state,
    optimal_state,
    polarized_state,
)
from qgas.distributions import (
    JzDistribution,
    Panel,
    basis_projections,
    figure_data,
    husimi_grid,
    husimi_integral,
    jz_distribution,
)

GOLDEN = Path(__file__).parent / "golden"


class TestJzDistribution:
    def test_polarized(self):
        d = jz_distribution(polarized_state(6))
        assert d.at(3) == 1 and d.probabilities.sum() == 1

    def test_optimal(self):
        d = jz_distribution(optimal_state(100))
        assert d.at(-50) == pytest.approx(0.25) and d.at(50) == pytest.approx(0.25)
        assert d.at(0) == pytest.approx(0.5)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="sum"):
            JzDistribution(2, np.array([0.5, 0.1, 0.1]))

    def test_read_only(self):
        d = jz_distribution(polarized_state(4))
        with pytest.raises(ValueError):
            d.probabilities[0] = 1

    @pytest.mark.parametrize("gen", ["A", "Jz"])
    def test_dephasing_leaves_populations(self, rng, gen):
        rho = random_ket(rng, 12).to_density()
        out = dephase(rho, DephasingSpec(gen, 0.7))
        np.testing.assert_allclose(jz_distribution(out).probabilities, jz_distribution(rho).probabilities, atol=1e-15)

    def test_dephased_pre_recombiner_distribution_unchanged(self):
        cfg = ExperimentConfig(20)
        clean = interrogate(cfg).probabilities()
        noisy = interrogate(cfg.with_dephasing("A", 0.3).with_dephasing("Jz", 0.2)).probabilities()
        np.testing.assert_allclose(noisy, clean, atol=1e-14)


class TestHusimi:
    def test_bounded(self, rng):
        g = husimi_grid(random_ket(rng, 15), 41, 61)
        assert g.values.max() <= 1 + 1e-12 and g.values.min() >= -1e-15

    def test_global_phase_invariant(self, rng):
        ket = random_ket(rng, 9)
        shifted = DickeKet(9, np.exp(0.83j) * ket.amplitudes)
        np.testing.assert_allclose(husimi_grid(shifted, 31, 31).values, husimi_grid(ket, 31, 31).values, atol=1e-14)

    def test_polarized_peaks_at_north_pole(self):
        g = husimi_grid(polarized_state(30), 61, 61)
        np.testing.assert_allclose(g.values[0], 1, atol=1e-13)
        assert g.values[1:].max() < 1

    def test_grid_endpoints(self):
        g = husimi_grid(polarized_state(3), 11, 21)
        assert g.theta[0] == 0 and g.theta[-1] == pytest.approx(np.pi)
        assert g.phi[0] == pytest.approx(-np.pi) and g.phi[-1] == pytest.approx(np.pi)
        np.testing.assert_allclose(g.values[:, 0], g.values[:, -1], atol=1e-14)

    def test_integral_n10(self):
        g = husimi_grid(css_state(10, 0.3, 0.2), 201, 201)
        assert husimi_integral(g) == pytest.approx(4 * np.pi / 11, rel=0.02)

    @given(st.integers(1, 12), st.floats(0, np.pi), st.floats(-np.pi, np.pi))
    def test_integral_any_css(self, n, theta, phi):
        g = husimi_grid(css_state(n, theta, phi), 121, 121)
        assert husimi_integral(g) == pytest.approx(4 * np.pi / (n + 1), rel=0.02)

    def test_cat_lobes(self):
        g = husimi_grid(cat_state_analytic(100), 181, 361)
        q = g.values
        # both poles and the two equatorial points phi = +-pi/2, separated by pi
        assert q[0].max() == pytest.approx(0.25, abs=1e-3)
        assert q[-1].max() == pytest.approx(0.25, abs=1e-3)
        eq = q[90]
        assert g.theta[90] == pytest.approx(np.pi / 2)
        peaks = g.phi[np.argsort(eq)[-2:]]
        assert sorted(peaks) == pytest.approx([-np.pi / 2, np.pi / 2], abs=1e-9)
        assert eq.max() == pytest.approx(0.25, abs=1e-3)
        # away from all four lobes the distribution is negligible
        assert q[45, 0] < 1e-6 and q[135, 180] < 1e-6

    def test_density_matches_ket(self, rng):
        ket = random_ket(rng, 7)
        a = husimi_grid(ket, 17, 23).values
        b = husimi_grid(ket.to_density(), 17, 23).values
        np.testing.assert_allclose(b, a, atol=1e-13)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            husimi_grid(polarized_state(2), 1, 5)


class TestBasisProjections:
    def test_polarized_spikes(self):
        n = 10
        p = basis_projections(polarized_state(n))
        assert p["Jz"][-1] == 1
        # along x and y the polarized state is binomial
        from scipy.stats import binom

        expected = binom.pmf(np.arange(n + 1), n, 0.5)
        np.testing.assert_allclose(p["Jx"], expected, atol=1e-13)
        np.testing.assert_allclose(p["Jy"], expected, atol=1e-13)

    @pytest.mark.parametrize(
        "phi,axis,index", [(np.pi / 2, "Jx", -1), (-np.pi / 2, "Jx", 0), (0.0, "Jy", -1), (np.pi, "Jy", 0)]
    )
    def test_equatorial_css_is_extremal(self, phi, axis, index):
        assert basis_projections(css_state(8, np.pi / 2, phi))[axis][index] == pytest.approx(1, abs=1e-12)

    def test_cat_has_x_extremes(self):
        p = basis_projections(cat_state_analytic(100))
        assert p["Jx"][0] == pytest.approx(0.25, abs=1e-10) and p["Jx"][-1] == pytest.approx(0.25, abs=1e-10)
        assert p["Jz"][0] == pytest.approx(0.25, abs=1e-10) and p["Jz"][-1] == pytest.approx(0.25, abs=1e-10)

    def test_each_sums_to_one(self, rng):
        for axis, p in basis_projections(random_ket(rng, 13)).items():
            assert p.sum() == pytest.approx(1, abs=1e-12), axis

    def test_density_matches_ket(self, rng):
        ket = random_ket(rng, 6)
        a, b = basis_projections(ket), basis_projections(ket.to_density())
        for axis in a:
            np.testing.assert_allclose(b[axis], a[axis], atol=1e-13)


class TestFigureData:
    @pytest.mark.parametrize("fid,count", [("FIG2", 8), ("FIG3", 3), ("FIG4", 5)])
    def test_panel_counts(self, fid, count):
        over = {"theta_points": 11, "phi_points": 21} if fid == "FIG2" else {}
        panels = figure_data(fid, 20, over)
        assert len(panels) == count
        assert len({p.filename for p in panels}) == count

    def test_unknown_figure(self):
        with pytest.raises(ValueError, match="unknown figure"):
            figure_data("FIG9")

    def test_fig3a_returns_polarized(self):
        a = figure_data("FIG3", 100)[0]
        assert a.columns["P"][-1] == pytest.approx(1, abs=1e-12)

    def test_fig4a_matches_golden(self):
        _, golden = qio.read_csv(GOLDEN / "fig4a.csv")
        a = figure_data("FIG4", 100)[0]
        np.testing.assert_array_equal(a.columns["m"], golden["m"])
        np.testing.assert_allclose(a.columns["P"], golden["P"], atol=1e-10)

    @pytest.mark.parametrize("fid", ["FIG3", "FIG4"])
    def test_derivative_panels_sum_to_zero(self, fid):
        for panel in figure_data(fid, 40)[1:]:
            (col,) = [c for c in panel.columns if c != "m"]
            assert abs(panel.columns[col].sum()) < 1e-6

    def test_fig2_marginals_sum_to_one(self):
        for panel in figure_data("FIG2", 20, {"theta_points": 11, "phi_points": 21})[2:]:
            assert panel.columns["P"].sum() == pytest.approx(1, abs=1e-12)

    def test_fig2_grid_note(self):
        a = figure_data("FIG2", 10, {"theta_points": 7, "phi_points": 9})[0]
        assert len(a.columns["Q"]) == 63 and "7x9" in a.notes[0]

    def test_deterministic(self):
        first = figure_data("FIG4", 30)
        second = figure_data("FIG4", 30)
        for a, b in zip(first, second):
            for key in a.columns:
                np.testing.assert_array_equal(a.columns[key], b.columns[key])

    def test_fd_check_notes(self):
        panels = figure_data("FIG3", 10, {"fd_check": True, "fd_step": 1e-7})
        for p in panels[1:]:
            note = [n for n in p.notes if n.startswith("finite-difference")]
            assert note and float(note[0].split(":")[1]) < 1e-6

    def test_panel_filename(self):
        assert Panel("FIG3", "c", "", {}).filename == "fig3c.csv"

    def test_derivative_panels_record_base_point(self):
        for p in figure_data("FIG4", 10)[1:]:
            assert p.notes[0] == "base point: alpha=1e-08, beta=1e-08, delta_A=1e-08, delta_Jz=1e-08"
