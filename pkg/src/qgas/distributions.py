"""Measurement statistics, Husimi-Q grids and figure panel data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import trapezoid

from .channels import CAT_CHI_TAU, ExperimentConfig, TwistingSpec, run_experiment
from .dicke import (
    DEFAULT_CONVENTION,
    DickeKet,
    State,
    cat_state_analytic,
    jx_eigensystem,
    m_values,
    optimal_state,
)
from .fisher import FIGURE_OFFSET, ParameterId, prob_derivatives_analytic, prob_derivatives_fd, with_offsets

FIGURES = ("FIG2", "FIG3", "FIG4")


@dataclass(frozen=True)
class JzDistribution:
    n: int
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} probabilities, got {p.shape}")
        if p.min() < -1e-12:
            raise ValueError(f"negative probability {p.min():.3g}")
        if abs(p.sum() - 1) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n)

    def at(self, m: float) -> float:
        return float(self.probabilities[int(round(m + self.n / 2))])


@dataclass(frozen=True)
class HusimiGrid:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray  # shape (len(theta), len(phi))

    @property
    def theta_points(self) -> int:
        return len(self.theta)

    @property
    def phi_points(self) -> int:
        return len(self.phi)


def jz_distribution(state: State) -> JzDistribution:
    return JzDistribution(state.n, state.probabilities())


def _css_rows(n: int, theta: np.ndarray) -> np.ndarray:
    """Rows exp(i theta J_x)|(N/2)_z> for every theta."""
    w, vecs = jx_eigensystem(n)
    top = vecs[-1]  # <N/2| v_k for each eigenvector
    return (np.exp(1j * np.outer(theta, w)) * top) @ vecs.T


def husimi_grid(state: State, theta_points: int = 101, phi_points: int = 101) -> HusimiGrid:
    """Q(theta, phi) = |<xi(theta,phi)|psi>|^2 on inclusive grids.

    theta covers [0, pi] including both poles; phi covers [-pi, pi] with both
    (identical) endpoints emitted.
    """
    if theta_points < 2 or phi_points < 2:
        raise ValueError("grid resolutions must be >= 2")
    n = state.n
    theta = np.linspace(0.0, np.pi, theta_points)
    phi = np.linspace(-np.pi, np.pi, phi_points)
    rows = _css_rows(n, theta)  # (T, N+1)
    phase = np.exp(-1j * np.outer(m_values(n), phi))  # conj of exp(i phi m)
    if isinstance(state, DickeKet):
        amp = (rows.conj() * state.amplitudes) @ phase
        q = np.abs(amp) ** 2
    else:
        # <xi|rho|xi> for every (theta, phi): rows differ only by diagonal phases in phi
        q = np.empty((theta_points, phi_points))
        for i, r in enumerate(rows):
            xi = r[:, None] * phase.conj()  # (N+1, P)
            q[i] = np.real(np.einsum("mp,mk,kp->p", xi.conj(), state.matrix, xi))
    return HusimiGrid(theta, phi, q)


def husimi_integral(grid: HusimiGrid) -> float:
    """Trapezoid estimate of the integral of Q over the sphere (4 pi/(N+1) exactly)."""
    integrand = grid.values * np.sin(grid.theta)[:, None]
    return float(trapezoid(trapezoid(integrand, grid.phi, axis=1), grid.theta))


def basis_projections(state: State) -> dict[str, np.ndarray]:
    """Probabilities over the J_x, J_y and J_z eigenbases, ascending eigenvalue."""
    n = state.n
    _, vecs = jx_eigensystem(n)
    # J_y = D J_x D^dag with D = exp(-i pi/2 J_z)
    to_y = np.exp(1j * np.pi / 2 * m_values(n))  # D^dag diagonal
    if isinstance(state, DickeKet):
        a = state.amplitudes
        px = np.abs(vecs.T @ a) ** 2
        py = np.abs(vecs.T @ (to_y * a)) ** 2
        pz = np.abs(a) ** 2
    else:
        rho = state.matrix
        px = np.real(np.einsum("mk,mn,nk->k", vecs, rho, vecs))
        rho_y = rho * np.outer(to_y, to_y.conj())
        py = np.real(np.einsum("mk,mn,nk->k", vecs, rho_y, vecs))
        pz = np.real(np.diag(rho)).copy()
    return {"Jx": px, "Jy": py, "Jz": pz}


# ---------------------------------------------------------------------------
# Figure data
# ---------------------------------------------------------------------------


@dataclass
class Panel:
    """One figure panel; ``columns`` map header name -> 1-D array."""

    figure: str
    panel: str
    description: str
    columns: dict[str, np.ndarray]
    notes: list[str] = field(default_factory=list)

    @property
    def filename(self) -> str:
        return f"fig{self.figure[-1]}{self.panel}.csv"


def _fig2(n: int, overrides: Mapping) -> list[Panel]:
    tp = int(overrides.get("theta_points", 91))
    pp = int(overrides.get("phi_points", 181))
    states = {"opt": optimal_state(n), "cat": cat_state_analytic(n)}
    panels = []
    grid_note = "theta inclusive of poles; phi periodic with both endpoints emitted"
    for label, key in (("a", "opt"), ("b", "cat")):
        g = husimi_grid(states[key], tp, pp)
        th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
        panels.append(
            Panel(
                "FIG2",
                label,
                f"Husimi Q of the {'optimal' if key == 'opt' else 'OAT cat'} state",
                {"theta": th.ravel(), "phi": ph.ravel(), "Q": g.values.ravel()},
                [f"grid: {tp}x{pp}; {grid_note}"],
            )
        )
    m = m_values(n)
    for key, labels in (("opt", "ceg"), ("cat", "dfh")):
        proj = basis_projections(states[key])
        for label, axis in zip(labels, ("Jx", "Jy", "Jz")):
            panels.append(Panel("FIG2", label, f"P({axis}) of the {key} state", {"m": m, "P": proj[axis]}))
    return panels


def _prob_panels(figure: str, n: int, recombiner: str, params, overrides: Mapping) -> list[Panel]:
    chi_tau = float(overrides.get("chi_tau", CAT_CHI_TAU))
    offset = float(overrides.get("offset", FIGURE_OFFSET))
    convention = overrides.get("convention", DEFAULT_CONVENTION)
    fd = bool(overrides.get("fd_check", False))
    cfg = ExperimentConfig(n, TwistingSpec(chi_tau), recombiner=recombiner, convention=convention)
    m = m_values(n)
    probs = run_experiment(cfg).probabilities()
    panels = [Panel(figure, "a", "P(J_z) at alpha = beta = 0", {"m": m, "P": probs})]
    base = with_offsets(cfg, params, offset)
    pd = prob_derivatives_analytic(base, params)
    if fd:
        check = prob_derivatives_fd(base, params, step=float(overrides.get("fd_step", 1e-6)))
    for label, p in zip("bcde", params):
        notes = [f"base point: {', '.join(f'{q.value}={offset:g}' for q in params)}"]
        if fd:
            dev = float(np.abs(check.column(p) - pd.column(p)).max())
            notes.append(f"finite-difference max deviation: {dev:.3e}")
        panels.append(Panel(figure, label, f"dP(J_z)/d{p.value}", {"m": m, p.column: pd.column(p)}, notes))
    return panels


def figure_data(figure_id: str, n: int = 100, overrides: Mapping | None = None) -> list[Panel]:
    """Panel data for the state portraits (FIG2) and the two recombiner schemes (FIG3, FIG4)."""
    overrides = dict(overrides or {})
    fid = figure_id.upper()
    if fid not in FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; expected one of {FIGURES}")
    if fid == "FIG2":
        return _fig2(n, overrides)
    if fid == "FIG3":
        return _prob_panels(fid, n, "U0_DAGGER", (ParameterId.ALPHA, ParameterId.BETA), overrides)
    return _prob_panels(fid, n, "U0", tuple(ParameterId), overrides)
