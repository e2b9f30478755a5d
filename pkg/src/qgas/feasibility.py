"""Laboratory scale estimates: kappa integrals, alpha, minimum atom number.

All quantities are SI.  The Gaussian mode density is
|u(r)|^2 = exp(-|r - c|^2 / sigma^2) / (sigma^3 pi^(3/2)), i.e. a per-axis
standard deviation of sigma/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import constants

AMU = constants.physical_constants["atomic mass constant"][0]
RB87_MASS = 1.4432e-25  # kg
YB174_MASS = 173.9388664 * AMU
# published targets the report is compared against, never fitted to
REFERENCE_N_MIN = 5e9
REFERENCE_DENSITY_CM3 = 4e13


@dataclass(frozen=True)
class PhysicalConfig:
    mass: float
    sigma: float
    separation: float
    time: float
    repetitions: float = 1e5
    G: float = constants.G
    hbar: float = constants.hbar

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @classmethod
    def rubidium(cls, sigma=50e-6, time=1.0, repetitions=1e5, separation=None) -> "PhysicalConfig":
        return cls(RB87_MASS, sigma, 10 * sigma if separation is None else separation, time, repetitions)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "PhysicalConfig":
        return cls(**{k: float(v) for k, v in data.items()})


def _centers(config: PhysicalConfig, i: str, j: str) -> float:
    if i not in ("a", "b") or j not in ("a", "b"):
        raise ValueError("mode labels must be 'a' or 'b'")
    return 0.0 if i == j else 2 * config.separation


def mean_inverse_distance(d: float, sigma: float) -> float:
    """E[1/|R|] for R ~ N(d e_x, sigma^2 I_3): erf(d / (sqrt 2 sigma)) / d."""
    x = d / (math.sqrt(2) * sigma)
    if x < 1e-4:
        # series of erf(x)/x keeps the d -> 0 limit smooth
        return math.sqrt(2 / math.pi) / sigma * (1 - x * x / 3 + x**4 / 10)
    return math.erf(x) / d


def kappa_gaussian_analytic(config: PhysicalConfig, i: str = "a", j: str = "a") -> float:
    """kappa_ij in joules for two Gaussian modes; the pair difference has variance sigma^2 per axis."""
    d = _centers(config, i, j)
    return -0.5 * config.G * config.mass**2 * mean_inverse_distance(d, config.sigma)


def kappa_matrix(config: PhysicalConfig) -> np.ndarray:
    return np.array([[kappa_gaussian_analytic(config, i, j) for j in "ab"] for i in "ab"])


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    samples: int
    seed: int


def kappa_monte_carlo(
    config: PhysicalConfig,
    i: str = "a",
    j: str = "a",
    samples: int = 10_000_000,
    seed: int = 0,
    batch: int = 1_000_000,
) -> MonteCarloEstimate:
    """Sample r ~ |u_i|^2 and r' ~ |u_j|^2 independently and average -G m^2 / (2|r - r'|)."""
    d = _centers(config, i, j)
    s = config.sigma / math.sqrt(2)
    n_batches = -(-samples // batch)
    seqs = np.random.SeedSequence(seed).spawn(n_batches)
    total = total_sq = 0.0
    remaining = samples
    for seq in seqs:
        k = min(batch, remaining)
        remaining -= k
        rng = np.random.default_rng(seq)
        r = rng.normal(0.0, s, size=(k, 3))
        rp = rng.normal(0.0, s, size=(k, 3))
        rp[:, 0] += d
        inv = 1.0 / np.linalg.norm(r - rp, axis=1)
        total += inv.sum()
        total_sq += np.dot(inv, inv)
    mean = total / samples
    var = total_sq / samples - mean**2
    pref = -0.5 * config.G * config.mass**2
    return MonteCarloEstimate(pref * mean, abs(pref) * math.sqrt(var / samples), samples, seed)


@dataclass(frozen=True)
class AlphaEstimate:
    formula: float
    derived: float

    @property
    def ratio(self) -> float:
        return self.derived / self.formula


def alpha_magnitude(config: PhysicalConfig) -> AlphaEstimate:
    """alpha = t G m^2 / (hbar sigma sqrt(pi)) next to |kappa_aa| t / hbar."""
    formula = config.time * config.G * config.mass**2 / (config.hbar * config.sigma * math.sqrt(math.pi))
    derived = abs(kappa_gaussian_analytic(config, "a", "a")) * config.time / config.hbar
    return AlphaEstimate(formula, derived)


@dataclass(frozen=True)
class AtomNumber:
    formula: float
    derived: float


def minimum_atom_number(config: PhysicalConfig) -> AtomNumber:
    """Smallest N with 2 / (sqrt(k) N^2) <= alpha."""
    k = config.repetitions
    formula = math.sqrt(
        2 * config.hbar * config.sigma * math.sqrt(math.pi) / (math.sqrt(k) * config.G * config.mass**2 * config.time)
    )
    derived = math.sqrt(2 / (math.sqrt(k) * alpha_magnitude(config).derived))
    return AtomNumber(formula, derived)


def detectable_alpha(n: float, repetitions: float) -> float:
    return 2 / (math.sqrt(repetitions) * n**2)


@dataclass(frozen=True)
class ScalingRow:
    sigma: float
    alpha: float
    gravity_coeff: float  # alpha(sigma) / alpha(sigma_0) ~ sigma^-1
    contact_coeff: float  # ~ sigma^-3, relative to sigma_0


def scaling_separation(config: PhysicalConfig, sigma_values: Sequence[float]) -> list[ScalingRow]:
    sigmas = [float(s) for s in sigma_values]
    if not sigmas or any(not (s > 0 and math.isfinite(s)) for s in sigmas):
        raise ValueError("sigma_values must be a nonempty list of positive numbers")
    s0 = sigmas[0]
    rows = []
    for s in sigmas:
        cfg = PhysicalConfig(config.mass, s, config.separation, config.time, config.repetitions, config.G, config.hbar)
        rows.append(ScalingRow(s, alpha_magnitude(cfg).formula, s0 / s, (s0 / s) ** 3))
    return rows


def peak_density(config: PhysicalConfig, n: float) -> float:
    """Peak density (m^-3) of n atoms in one mode, n / (pi^(3/2) sigma^3)."""
    return n / (math.pi**1.5 * config.sigma**3)


@dataclass(frozen=True)
class FeasibilityReport:
    alpha_paper: float
    alpha_derived: float
    kappa_matrix: list
    n_min: float
    n_min_derived: float
    cross_term_ratio: float
    density_peak: float
    density_peak_cm3: float
    density_flag: bool

    def to_json(self) -> dict:
        out = asdict(self)
        out["alpha_ratio_derived_over_formula"] = self.alpha_derived / self.alpha_paper
        out["n_min_ratio_derived_over_formula"] = self.n_min_derived / self.n_min
        out["reference_n_min"] = REFERENCE_N_MIN
        out["reference_density_cm3"] = REFERENCE_DENSITY_CM3
        return out


def feasibility_report(config: PhysicalConfig) -> FeasibilityReport:
    alpha = alpha_magnitude(config)
    n_min = minimum_atom_number(config)
    kap = kappa_matrix(config)
    density = peak_density(config, n_min.formula)
    density_cm3 = density * 1e-6
    off_by = max(density_cm3 / REFERENCE_DENSITY_CM3, REFERENCE_DENSITY_CM3 / density_cm3)
    return FeasibilityReport(
        alpha_paper=alpha.formula,
        alpha_derived=alpha.derived,
        kappa_matrix=kap.tolist(),
        n_min=n_min.formula,
        n_min_derived=n_min.derived,
        cross_term_ratio=float(kap[0, 1] / kap[0, 0]),
        density_peak=density,
        density_peak_cm3=density_cm3,
        density_flag=bool(off_by > 10),
    )

