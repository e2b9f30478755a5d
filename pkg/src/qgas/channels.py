"""Interferometer channels: OAT preparation, gravitational phases, dephasing.

The pipeline is

    rho_f = U2 . D . U_Q . U_C . U0 |Psi0><Psi0| (...)^dag

with every map between U0 and U2 diagonal in the Dicke basis, so their
relative order does not matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dicke import (
    DEFAULT_CONVENTION,
    DickeDensity,
    DickeKet,
    State,
    a_diagonal,
    jz_scale,
    m_values,
    polarized_state,
    rotate_x,
    rotation_x,
)

RECOMBINERS = ("U0_DAGGER", "U0")
DEPHASING_GENERATORS = ("A", "Jz")
CAT_CHI_TAU = math.pi / 4


@dataclass(frozen=True)
class TwistingSpec:
    chi_tau: float = CAT_CHI_TAU

    def __post_init__(self):
        if not math.isfinite(self.chi_tau):
            raise ValueError("chi_tau must be finite")


@dataclass(frozen=True)
class GravityParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class DephasingSpec:
    generator: str
    delta: float

    def __post_init__(self):
        if self.generator not in DEPHASING_GENERATORS:
            raise ValueError(f"dephasing generator must be one of {DEPHASING_GENERATORS}, got {self.generator!r}")
        if not math.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"dephasing magnitude delta must be finite and >= 0, got {self.delta}")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    twisting: TwistingSpec = field(default_factory=TwistingSpec)
    gravity: GravityParams = field(default_factory=GravityParams)
    dephasing: tuple[DephasingSpec, ...] = ()
    recombiner: str = "U0_DAGGER"
    convention: str = DEFAULT_CONVENTION

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "dephasing", tuple(self.dephasing))
        if self.recombiner not in RECOMBINERS:
            raise ValueError(f"recombiner must be one of {RECOMBINERS}, got {self.recombiner!r}")
        jz_scale(self.convention)

    def dephasing_delta(self, generator: str) -> float:
        return sum(d.delta for d in self.dephasing if d.generator == generator)

    def with_dephasing(self, generator: str, delta: float) -> "ExperimentConfig":
        """Copy with the total dephasing for ``generator`` set to ``delta``."""
        others = tuple(d for d in self.dephasing if d.generator != generator)
        new = others + ((DephasingSpec(generator, delta),) if delta != 0 else ())
        return replace(self, dephasing=new)

    def with_gravity(self, **kw) -> "ExperimentConfig":
        return replace(self, gravity=replace(self.gravity, **kw))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "chi_tau": self.twisting.chi_tau,
            "alpha": self.gravity.alpha,
            "beta": self.gravity.beta,
            "gamma": self.gravity.gamma,
            "dephasing": [{"generator": d.generator, "delta": d.delta} for d in self.dephasing],
            "recombiner": self.recombiner,
            "convention": self.convention,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        return cls(
            n=data["n"],
            twisting=TwistingSpec(float(data.get("chi_tau", CAT_CHI_TAU))),
            gravity=GravityParams(
                float(data.get("alpha", 0.0)), float(data.get("beta", 0.0)), float(data.get("gamma", 0.0))
            ),
            dephasing=tuple(DephasingSpec(d["generator"], float(d["delta"])) for d in data.get("dephasing", [])),
            recombiner=data.get("recombiner", "U0_DAGGER"),
            convention=data.get("convention", DEFAULT_CONVENTION),
        )


# ---------------------------------------------------------------------------
# Preparation
# ---------------------------------------------------------------------------


def _oat_vec(vec: np.ndarray, chi_tau: float, inverse: bool = False) -> np.ndarray:
    m = m_values(len(vec) - 1)
    sign = -1.0 if inverse else 1.0
    out = rotate_x(vec, sign * np.pi / 2)
    out = np.exp(1j * sign * chi_tau * m**2) * out
    return rotate_x(out, sign * np.pi / 2)


def oat_prepare(state: DickeKet, spec: TwistingSpec = TwistingSpec()) -> DickeKet:
    """U0 = exp(i J_x pi/2) exp(i chi tau J_z^2) exp(i J_x pi/2), rightmost factor first."""
    return DickeKet(state.n, _oat_vec(state.amplitudes, spec.chi_tau))


def oat_unprepare(state: DickeKet, spec: TwistingSpec = TwistingSpec()) -> DickeKet:
    """U0^dag, the exact inverse of :func:`oat_prepare`."""
    return DickeKet(state.n, _oat_vec(state.amplitudes, spec.chi_tau, inverse=True))


def preparation_unitary(n: int, spec: TwistingSpec = TwistingSpec()) -> np.ndarray:
    r = rotation_x(n, np.pi / 2)
    return (r * np.exp(1j * spec.chi_tau * m_values(n) ** 2)) @ r


def recombiner_unitary(n: int, spec: TwistingSpec, recombiner: str) -> np.ndarray:
    u0 = preparation_unitary(n, spec)
    if recombiner == "U0":
        return u0
    if recombiner == "U0_DAGGER":
        return u0.conj().T
    raise ValueError(f"recombiner must be one of {RECOMBINERS}, got {recombiner!r}")


def _apply_recombiner(vec: np.ndarray, spec: TwistingSpec, recombiner: str) -> np.ndarray:
    if recombiner == "U0":
        return _oat_vec(vec, spec.chi_tau)
    return _oat_vec(vec, spec.chi_tau, inverse=True)


# ---------------------------------------------------------------------------
# Diagonal channels
# ---------------------------------------------------------------------------


def _diag_unitary(state: State, phases: np.ndarray) -> State:
    u = np.exp(1j * phases)
    if isinstance(state, DickeKet):
        return DickeKet(state.n, u * state.amplitudes)
    return DickeDensity(state.n, state.matrix * np.outer(u, u.conj()))


def apply_quantum_gravity(state: State, alpha: float) -> State:
    """U_Q = exp(i alpha A)."""
    return _diag_unitary(state, alpha * a_diagonal(state.n))


def beta_generator(n: int, convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    """Diagonal of the operator multiplying beta, J_z scaled by the convention."""
    return jz_scale(convention) * m_values(n)


def apply_classical_gravity(
    state: State, beta: float, gamma: float = 0.0, convention: str = DEFAULT_CONVENTION
) -> State:
    """U_C = exp[i(beta J_z + gamma N_+)] with J_z scaled per ``convention``."""
    return _diag_unitary(state, beta * beta_generator(state.n, convention) + gamma * state.n)


def dephasing_eigenvalues(generator: str, n: int) -> np.ndarray:
    if generator == "A":
        return a_diagonal(n)
    if generator == "Jz":
        return m_values(n)
    raise ValueError(f"dephasing generator must be one of {DEPHASING_GENERATORS}, got {generator!r}")


def _gap_squared(generator: str, n: int) -> np.ndarray:
    lam = dephasing_eigenvalues(generator, n)
    return (lam[:, None] - lam[None, :]) ** 2


def dephase(rho: DickeDensity, spec: DephasingSpec) -> DickeDensity:
    """rho_nm *= exp(-delta (lambda_n - lambda_m)^2).

    With the dissipator of :func:`lindblad_superoperator` this is
    exp(2 delta L[Gamma]); the elementwise form is the one implemented.
    """
    if spec.delta < 0:
        raise ValueError("dephasing magnitude must be >= 0")
    if spec.delta == 0:
        return rho
    return DickeDensity(rho.n, rho.matrix * np.exp(-spec.delta * _gap_squared(spec.generator, rho.n)))


def lindblad_derivative(rho: DickeDensity, generator: str) -> np.ndarray:
    """d/d(delta) of :func:`dephase` at an already dephased rho: -(lambda_n - lambda_m)^2 rho_nm.

    Equals 2 L[Gamma] rho for the dissipator in :func:`lindblad_superoperator`.
    """
    return -_gap_squared(generator, rho.n) * rho.matrix


def lindblad_superoperator(rho: np.ndarray, gamma_op: np.ndarray) -> np.ndarray:
    """Gamma rho Gamma - (Gamma^2 rho + rho Gamma^2)/2 for a dense Gamma."""
    g2 = gamma_op @ gamma_op
    return gamma_op @ rho @ gamma_op - 0.5 * (g2 @ rho + rho @ g2)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

CANONICAL_STAGES = ("U_C", "U_Q", "dephasing")


def interrogate(
    config: ExperimentConfig,
    initial: DickeKet | None = None,
    order: Sequence[str] = CANONICAL_STAGES,
    as_density: bool = False,
) -> State:
    """State after U0 and the gravitational stage, before the recombiner."""
    if initial is None:
        initial = polarized_state(config.n)
    elif initial.n != config.n:
        raise ValueError(f"initial state has N={initial.n}, config has N={config.n}")
    state: State = oat_prepare(initial, config.twisting)
    if as_density or config.dephasing:
        state = state.to_density()
    g = config.gravity
    for stage in order:
        if stage == "U_C":
            state = apply_classical_gravity(state, g.beta, g.gamma, config.convention)
        elif stage == "U_Q":
            state = apply_quantum_gravity(state, g.alpha)
        elif stage == "dephasing":
            for spec in sorted(config.dephasing, key=lambda d: d.generator):
                state = dephase(state, spec)
        else:
            raise ValueError(f"unknown stage {stage!r}")
    return state


def recombine(state: State, config: ExperimentConfig) -> State:
    if isinstance(state, DickeKet):
        return DickeKet(state.n, _apply_recombiner(state.amplitudes, config.twisting, config.recombiner))
    u2 = recombiner_unitary(config.n, config.twisting, config.recombiner)
    return DickeDensity(state.n, u2 @ state.matrix @ u2.conj().T)


def run_experiment(
    config: ExperimentConfig,
    initial: DickeKet | None = None,
    as_density: bool = False,
    order: Sequence[str] = CANONICAL_STAGES,
) -> State:
    """Full interferometer sequence.

    Returns a :class:`DickeKet` when no dephasing is configured (unless
    ``as_density``), otherwise a :class:`DickeDensity`.
    """
    return recombine(interrogate(config, initial, order, as_density), config)
