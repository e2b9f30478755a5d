"""Quantum and classical Fisher matrices for the (alpha, beta, delta_A, delta_Jz) family."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import (
    ExperimentConfig,
    beta_generator,
    dephasing_eigenvalues,
    interrogate,
    recombine,
    recombiner_unitary,
    run_experiment,
)
from .dicke import (
    DEFAULT_CONVENTION,
    CollectiveOperator,
    DickeDensity,
    DickeKet,
    a_diagonal,
    jz_scale,
)

FIGURE_OFFSET = 1e-8
DEFAULT_FLOOR = 1e-14
COND_LIMIT = 1e12


class ParameterId(str, enum.Enum):
    ALPHA = "alpha"
    BETA = "beta"
    DELTA_A = "delta_A"
    DELTA_JZ = "delta_Jz"

    @property
    def column(self) -> str:
        return {"alpha": "dP_dalpha", "beta": "dP_dbeta", "delta_A": "dP_ddeltaA", "delta_Jz": "dP_ddeltaJz"}[
            self.value
        ]

    @property
    def is_dephasing(self) -> bool:
        return self in (ParameterId.DELTA_A, ParameterId.DELTA_JZ)

    @property
    def generator(self) -> str:
        """Dephasing generator name for delta parameters."""
        return {"delta_A": "A", "delta_Jz": "Jz"}[self.value]


ALL_PARAMS = tuple(ParameterId)


def parse_params(params: Sequence[str | ParameterId]) -> tuple[ParameterId, ...]:
    out = []
    for p in params:
        try:
            out.append(ParameterId(p))
        except ValueError:
            raise ValueError(f"unknown parameter {p!r}; expected one of {[q.value for q in ParameterId]}") from None
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate parameters in {list(params)}")
    return tuple(out)


class SingularFisherError(ArithmeticError):
    def __init__(self, message: str, directions: list[dict]):
        super().__init__(message)
        self.directions = directions


@dataclass(frozen=True)
class FisherMatrix:
    params: tuple[ParameterId, ...]
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        k = len(self.params)
        if vals.shape != (k, k):
            raise ValueError(f"Fisher matrix shape {vals.shape} does not match {k} parameters")
        scale = max(1.0, float(np.abs(vals).max()) if vals.size else 1.0)
        if np.abs(vals - vals.T).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("Fisher matrix is not symmetric")
        vals = 0.5 * (vals + vals.T)
        vals.setflags(write=False)
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "values", vals)

    def __getitem__(self, key: tuple[str | ParameterId, str | ParameterId]) -> float:
        i, j = (self.params.index(ParameterId(k)) for k in key)
        return float(self.values[i, j])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values).min())

    def is_psd(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue() >= -tol * max(1.0, float(np.abs(self.values).max()))

    def correlation(self) -> np.ndarray:
        d = np.sqrt(np.clip(np.diag(self.values), 0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.values / np.outer(d, d)
        return np.nan_to_num(c)

    def to_json(self) -> dict:
        return {"params": [p.value for p in self.params], "matrix": self.values.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "FisherMatrix":
        return cls(parse_params(data["params"]), np.array(data["matrix"], dtype=float))


# ---------------------------------------------------------------------------
# Quantum Fisher information for pure states
# ---------------------------------------------------------------------------


def _generator_action(gen, psi: np.ndarray, convention: str) -> np.ndarray:
    if isinstance(gen, CollectiveOperator):
        if gen.n + 1 != len(psi):
            raise ValueError(f"generator acts on N={gen.n}, state has N={len(psi) - 1}")
        out = gen.apply(psi)
        return jz_scale(convention) * out if gen.kind == "Jz" else out
    g = np.asarray(gen)
    if g.ndim == 1:
        if np.iscomplexobj(g) and np.abs(g.imag).max() > 0:
            raise ValueError("diagonal generator must be real to be Hermitian")
        return np.real(g) * psi
    if np.abs(g - g.conj().T).max() > 1e-12 * max(1.0, np.abs(g).max()):
        raise ValueError("generator is not Hermitian")
    return g @ psi


def qfi_pure(state: DickeKet, generators: Sequence, convention: str = DEFAULT_CONVENTION) -> FisherMatrix:
    """4 (Re<G_i G_j> - <G_i><G_j>) for the family prod_k exp(i theta_k G_k)|state>.

    ``generators`` are CollectiveOperators (a J_z generator is scaled per
    ``convention``), real diagonals, or Hermitian matrices.  Parameters are
    labelled alpha, beta, ... positionally when they are the A / J_z pair.
    """
    psi = state.amplitudes
    acts = [_generator_action(g, psi, convention) for g in generators]
    means = [np.vdot(psi, a) for a in acts]
    k = len(acts)
    f = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            f[i, j] = 4 * (np.real(np.vdot(acts[i], acts[j])) - np.real(means[i]) * np.real(means[j]))
    return FisherMatrix(_labels_for(generators), f)


def qfi_pure_literal(state: DickeKet, derivatives: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
    """2(<d_i|d_j> + <d_j|d_i> - 2<psi|d_i><d_j|psi>) from explicit derivative kets.

    Returns the real matrix and the largest imaginary part encountered;
    the latter is nonzero only when the derivative family is not of the
    form i G|psi> with Hermitian G.
    """
    psi = state.amplitudes
    k = len(derivatives)
    f = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            di, dj = derivatives[i], derivatives[j]
            f[i, j] = 2 * (np.vdot(di, dj) + np.vdot(dj, di) - 2 * np.vdot(psi, di) * np.vdot(dj, psi))
    return np.real(f), float(np.abs(np.imag(f)).max())


def unitary_derivatives(state: DickeKet, generators: Sequence, convention: str = DEFAULT_CONVENTION) -> list:
    return [1j * _generator_action(g, state.amplitudes, convention) for g in generators]


def _labels_for(generators) -> tuple[ParameterId, ...]:
    kinds = [g.kind if isinstance(g, CollectiveOperator) else None for g in generators]
    mapping = {"A": ParameterId.ALPHA, "Jz": ParameterId.BETA}
    labels = [mapping.get(k) for k in kinds]
    if None in labels or len(set(labels)) != len(labels):
        # generic generators: fall back to positional labels
        if len(generators) > len(ALL_PARAMS):
            raise ValueError("too many generators to label")
        return ALL_PARAMS[: len(generators)]
    return tuple(labels)


def parameter_generator(param: ParameterId, n: int, convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    param = ParameterId(param)
    if param is ParameterId.ALPHA:
        return a_diagonal(n)
    if param is ParameterId.BETA:
        return beta_generator(n, convention)
    raise ValueError(f"{param.value} is a dephasing parameter and has no unitary generator")


def qfi_parameters(
    state: DickeKet,
    params: Sequence[str | ParameterId] = (ParameterId.ALPHA, ParameterId.BETA),
    convention: str = DEFAULT_CONVENTION,
) -> FisherMatrix:
    """QFI of U_Q U_C |state> over alpha and/or beta."""
    params = parse_params(params)
    for p in params:
        if p.is_dephasing:
            raise ValueError("the quantum Fisher matrix for dephasing parameters is not provided; use the CFI")
    gens = [parameter_generator(p, state.n, convention) for p in params]
    fm = qfi_pure(state, gens, convention)
    return FisherMatrix(params, fm.values)


# ---------------------------------------------------------------------------
# Probability derivatives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbabilityDerivatives:
    params: tuple[ParameterId, ...]
    m: np.ndarray
    probs: np.ndarray
    derivs: np.ndarray  # shape (len(params), N+1)

    def column(self, param: str | ParameterId) -> np.ndarray:
        return self.derivs[self.params.index(ParameterId(param))]


def _diag_of_conjugation(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """diag(U X U^dag) without forming the full product."""
    return np.einsum("ij,ij->i", u @ x, u.conj())


def prob_derivatives_analytic(
    config: ExperimentConfig,
    params: Sequence[str | ParameterId] = ALL_PARAMS,
    initial: DickeKet | None = None,
) -> ProbabilityDerivatives:
    """d P_m / d theta_i of the J_z distribution at the config's parameter values.

    Unitary parameters insert their (mean-subtracted) generator before the
    recombiner; dephasing parameters push L[Gamma] rho through it.
    """
    params = parse_params(params)
    n = config.n
    mid = interrogate(config, initial)
    derivs = np.empty((len(params), n + 1))

    if isinstance(mid, DickeKet) and not any(p.is_dephasing for p in params):
        psi = mid.amplitudes
        v = recombine(mid, config).amplitudes
        probs = np.abs(v) ** 2
        for row, p in enumerate(params):
            g = parameter_generator(p, n, config.convention)
            g = g - np.dot(g, np.abs(psi) ** 2)
            w = recombine(DickeKet(n, g * psi), config).amplitudes
            derivs[row] = -2 * np.imag(w * v.conj())
    else:
        rho = mid if isinstance(mid, DickeDensity) else mid.to_density()
        u2 = recombiner_unitary(n, config.twisting, config.recombiner)
        probs = np.real(_diag_of_conjugation(u2, rho.matrix))
        for row, p in enumerate(params):
            if p.is_dephasing:
                lam = dephasing_eigenvalues(p.generator, n)
                x = -((lam[:, None] - lam[None, :]) ** 2) * rho.matrix
                derivs[row] = np.real(_diag_of_conjugation(u2, x))
            else:
                g = parameter_generator(p, n, config.convention)
                g = g - np.real(np.dot(g, np.diag(rho.matrix)))
                derivs[row] = -2 * np.imag(_diag_of_conjugation(u2, g[:, None] * rho.matrix))
    return ProbabilityDerivatives(params, mid.m, probs, derivs)


def _distribution(config: ExperimentConfig, initial: DickeKet | None) -> np.ndarray:
    return run_experiment(config, initial).probabilities()


def _shifted(config: ExperimentConfig, p: ParameterId, value: float) -> ExperimentConfig:
    if p is ParameterId.ALPHA:
        return config.with_gravity(alpha=value)
    if p is ParameterId.BETA:
        return config.with_gravity(beta=value)
    return config.with_dephasing(p.generator, value)


def _base_value(config: ExperimentConfig, p: ParameterId) -> float:
    if p is ParameterId.ALPHA:
        return config.gravity.alpha
    if p is ParameterId.BETA:
        return config.gravity.beta
    return config.dephasing_delta(p.generator)


def prob_derivatives_fd(
    config: ExperimentConfig,
    params: Sequence[str | ParameterId] = ALL_PARAMS,
    step: float = 1e-6,
    initial: DickeKet | None = None,
) -> ProbabilityDerivatives:
    """Finite-difference cross-check of :func:`prob_derivatives_analytic`.

    Central differences, except a one-sided second-order stencil for a
    dephasing magnitude too close to its delta >= 0 boundary.
    """
    if not step > 0:
        raise ValueError(f"finite-difference step must be > 0, got {step}")
    params = parse_params(params)
    probs = _distribution(config, initial)
    derivs = np.empty((len(params), config.n + 1))
    for row, p in enumerate(params):
        x0 = _base_value(config, p)
        if p.is_dephasing and x0 - step < 0:
            f1 = _distribution(_shifted(config, p, x0 + step), initial)
            f2 = _distribution(_shifted(config, p, x0 + 2 * step), initial)
            derivs[row] = (-3 * probs + 4 * f1 - f2) / (2 * step)
        else:
            fp = _distribution(_shifted(config, p, x0 + step), initial)
            fm = _distribution(_shifted(config, p, x0 - step), initial)
            derivs[row] = (fp - fm) / (2 * step)
    m = np.arange(config.n + 1) - config.n / 2
    return ProbabilityDerivatives(params, m, probs, derivs)


def with_offsets(
    config: ExperimentConfig,
    params: Sequence[str | ParameterId] = ALL_PARAMS,
    offset: float = FIGURE_OFFSET,
) -> ExperimentConfig:
    """Move the base point of every listed parameter to ``offset`` (figure mode)."""
    for p in parse_params(params):
        config = _shifted(config, p, offset)
    return config


# ---------------------------------------------------------------------------
# Classical Fisher information and Cramer-Rao bounds
# ---------------------------------------------------------------------------


def cfi_matrix(
    derivs: np.ndarray,
    probs: np.ndarray,
    floor: float = DEFAULT_FLOOR,
    params: Sequence[str | ParameterId] | None = None,
) -> FisherMatrix:
    """sum_m dP_i dP_j / P_m with guarded handling of (near-)zero outcomes.

    Outcomes with P_m <= floor are kept only when their contribution is
    itself above ``floor``.  An outcome with P_m = 0 but a non-negligible
    derivative carries unbounded information; it is excluded from the sum
    and listed in ``diagnostics["diverging"]``.
    """
    derivs = np.atleast_2d(np.asarray(derivs, dtype=float))
    probs = np.asarray(probs, dtype=float)
    if floor < 0:
        raise ValueError("floor must be >= 0")
    if derivs.shape[1] != probs.shape[0]:
        raise ValueError(f"derivative table has {derivs.shape[1]} outcomes, distribution has {probs.shape[0]}")
    if probs.min(initial=0.0) < -1e-12:
        raise ValueError(f"negative probability {probs.min():.3g} in distribution")
    probs = np.clip(probs, 0.0, None)
    if params is None:
        params = ALL_PARAMS[: derivs.shape[0]]
    params = parse_params(params)

    peak = np.abs(derivs).max(axis=1, initial=0.0)
    f = np.zeros((derivs.shape[0],) * 2)
    skipped, diverging = 0, []
    for m_idx, p_m in enumerate(probs):
        d = derivs[:, m_idx]
        if p_m > floor:
            f += np.outer(d, d) / p_m
        elif p_m > 0 and np.any(d * d >= floor * p_m):
            f += np.outer(d, d) / p_m
        elif p_m == 0 and np.any(np.abs(d) > math.sqrt(floor) * np.maximum(peak, 1.0)):
            diverging.append(m_idx)
        else:
            skipped += 1
    return FisherMatrix(params, f, {"skipped": skipped, "diverging": diverging, "floor": floor})


def cfi_for_config(
    config: ExperimentConfig,
    params: Sequence[str | ParameterId] = ALL_PARAMS,
    floor: float = DEFAULT_FLOOR,
    initial: DickeKet | None = None,
) -> FisherMatrix:
    pd = prob_derivatives_analytic(config, params, initial)
    return cfi_matrix(pd.derivs, pd.probs, floor, pd.params)


@dataclass(frozen=True)
class CrbReport:
    params: tuple[ParameterId, ...]
    variances: np.ndarray
    repetitions: int
    detectable_alpha: float | None
    used_pinv: bool = False
    singular_directions: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "params": [p.value for p in self.params],
            "variances": [float(v) for v in self.variances],
            "repetitions": self.repetitions,
            "detectable_alpha": self.detectable_alpha,
            "used_pinv": self.used_pinv,
            "singular_directions": self.singular_directions,
        }


def _degenerate_directions(f: FisherMatrix, corr_eigs, corr_vecs, limit: float) -> list[dict]:
    top = max(float(corr_eigs.max()), 0.0)
    out = []
    for lam, vec in zip(corr_eigs, corr_vecs.T):
        if top == 0 or lam <= top / limit:
            out.append({"eigenvalue": float(lam), "direction": {p.value: float(c) for p, c in zip(f.params, vec)}})
    return out


def crb_invert(f: FisherMatrix, k: int = 1, allow_pinv: bool = False, cond_limit: float = COND_LIMIT) -> CrbReport:
    """Cramer-Rao variances diag(F^-1)/k.

    Conditioning is judged on the correlation matrix D^-1/2 F D^-1/2 so that
    parameters with very different units do not look singular.
    """
    if k < 1:
        raise ValueError("repetitions must be >= 1")
    vals = f.values
    diag = np.diag(vals)
    singular = bool(np.any(diag <= 0))
    if not singular:
        scale = 1 / np.sqrt(diag)
        corr = vals * np.outer(scale, scale)
        eigs, vecs = np.linalg.eigh(corr)
        singular = eigs.min() <= eigs.max() / cond_limit
    else:
        eigs, vecs = np.linalg.eigh(vals)
    directions: list[dict] = []
    if singular:
        directions = _degenerate_directions(f, eigs, vecs, cond_limit)
        if not allow_pinv:
            raise SingularFisherError(
                f"Fisher matrix over {[p.value for p in f.params]} is singular "
                f"(degenerate directions: {directions})",
                directions,
            )
        inv = np.linalg.pinv(vals, rcond=1 / cond_limit, hermitian=True)
    else:
        inv = np.outer(scale, scale) * np.linalg.inv(corr)
    variances = np.diag(inv) / k
    alpha = None
    if ParameterId.ALPHA in f.params:
        var_a = variances[f.params.index(ParameterId.ALPHA)]
        alpha = float(math.sqrt(var_a)) if var_a > 0 else math.inf
    return CrbReport(f.params, variances, k, alpha, singular, directions)


@dataclass(frozen=True)
class DecouplingRow:
    param: ParameterId
    ratio: float  # F_alpha,k / F_alpha,alpha
    correlation: float  # F_alpha,k / sqrt(F_alpha,alpha F_k,k)
    flagged: bool


def decoupling_report(
    config: ExperimentConfig,
    params: Sequence[str | ParameterId] = ALL_PARAMS,
    threshold: float = 0.01,
    fisher: FisherMatrix | None = None,
) -> list[DecouplingRow]:
    """How strongly each nuisance parameter is tied to alpha in the CFI.

    Rows are flagged on the unit-free correlation |F_ak| / sqrt(F_aa F_kk);
    the raw ratio F_ak / F_aa is reported alongside.
    """
    params = parse_params(params)
    if ParameterId.ALPHA not in params:
        raise ValueError("decoupling report needs alpha among the parameters")
    if fisher is None:
        fisher = cfi_for_config(config, params)
    ia = fisher.params.index(ParameterId.ALPHA)
    corr = fisher.correlation()
    faa = fisher.values[ia, ia]
    rows = []
    for i, p in enumerate(fisher.params):
        if p is ParameterId.ALPHA:
            continue
        ratio = fisher.values[ia, i] / faa if faa else math.inf
        c = float(corr[ia, i])
        rows.append(DecouplingRow(p, float(ratio), c, abs(c) > threshold))
    return rows
