"""Two-mode N-boson states in the Dicke (symmetric) basis.

Amplitudes are stored in ascending order of the J_z eigenvalue
m = -N/2, ..., N/2, so index k corresponds to m = k - N/2 and to mode
occupations n_a = N/2 + m, n_b = N/2 - m.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

# J_z normalization used wherever J_z acts as a parameter generator.
#   "half": J_z = (a^dag a - b^dag b) / 2
#   "unit": 2 J_z = a^dag a - b^dag b
# "unit" reproduces the quoted beta-beta Fisher elements (2N^2, 2(N^2+N)).
JZ_CONVENTIONS = {"half": 1.0, "unit": 2.0}
DEFAULT_CONVENTION = "unit"

OPERATOR_KINDS = ("Jx", "Jy", "Jz", "Jz2", "A", "Nplus")
DIAGONAL_KINDS = ("Jz", "Jz2", "A", "Nplus")

NORM_TOL = 1e-12


class DimensionError(ValueError):
    """Operator and state live on different particle numbers."""


def jz_scale(convention: str = DEFAULT_CONVENTION) -> float:
    try:
        return JZ_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(
            f"unknown J_z convention {convention!r}; expected one of {sorted(JZ_CONVENTIONS)}"
        ) from None


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"particle number must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValueError("particle number must be >= 1 (an empty interferometer has no state)")
    return n


def _require_even(n: int, what: str) -> None:
    if n % 2:
        raise ValueError(f"{what} requires an even particle number N (the m = 0 level must exist); got N={n}")


def m_values(n: int) -> np.ndarray:
    """J_z eigenvalues in storage order."""
    return np.arange(n + 1) - n / 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DickeKet:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n + 1,):
            raise DimensionError(f"expected {self.n + 1} amplitudes for N={self.n}, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "DickeKet":
        return DickeKet(self.n, self.amplitudes / self.norm())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DickeDensity":
        a = self.amplitudes
        return DickeDensity(self.n, np.outer(a, a.conj()))

    def amplitude(self, m: float) -> complex:
        return complex(self.amplitudes[_index(self.n, m)])

    def to_json(self) -> dict:
        return {"n": self.n, "amplitudes": [[float(c.real), float(c.imag)] for c in self.amplitudes]}

    @classmethod
    def from_json(cls, data: dict) -> "DickeKet":
        n = _check_n(data["n"])
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return cls(n, amps)


@dataclass(frozen=True)
class DickeDensity:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.n + 1, self.n + 1):
            raise DimensionError(f"expected {(self.n + 1,) * 2} density matrix for N={self.n}, got {mat.shape}")
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T)).min())


State = Union[DickeKet, DickeDensity]


def _index(n: int, m: float) -> int:
    k = m + n / 2
    if k != int(k) or not 0 <= k <= n:
        raise ValueError(f"m={m} is not a J_z eigenvalue for N={n}")
    return int(k)


# ---------------------------------------------------------------------------
# Collective operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CollectiveOperator:
    """J_x, J_y, J_z, J_z^2, A or N_+ on the N+1 dimensional Dicke space.

    Diagonal kinds carry only their real diagonal (``diag``); J_x and J_y
    carry a dense Hermitian ``matrix``.
    """

    n: int
    kind: str
    diag: np.ndarray | None = field(default=None, repr=False)
    matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_diagonal(self) -> bool:
        return self.diag is not None

    def as_matrix(self) -> np.ndarray:
        if self.diag is not None:
            return np.diag(self.diag).astype(complex)
        return np.array(self.matrix)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if self.diag is not None:
            return self.diag * vec
        return self.matrix @ vec


def _jx_offdiagonal(n: int) -> np.ndarray:
    j = n / 2
    m = m_values(n)[:-1]
    return 0.5 * np.sqrt(j * (j + 1) - m * (m + 1))


def a_diagonal(n: int) -> np.ndarray:
    """Eigenvalues of A = a^dag a^dag a a + b^dag b^dag b b."""
    m = m_values(n)
    na, nb = n / 2 + m, n / 2 - m
    return na * (na - 1) + nb * (nb - 1)


def operator(kind: str, n: int) -> CollectiveOperator:
    n = _check_n(n)
    m = m_values(n)
    if kind == "Jz":
        return CollectiveOperator(n, kind, diag=_frozen(m))
    if kind == "Jz2":
        return CollectiveOperator(n, kind, diag=_frozen(m**2))
    if kind == "A":
        return CollectiveOperator(n, kind, diag=_frozen(a_diagonal(n)))
    if kind == "Nplus":
        return CollectiveOperator(n, kind, diag=_frozen(np.full(n + 1, float(n))))
    if kind == "Jx":
        off = _jx_offdiagonal(n)
        mat = np.diag(off, 1) + np.diag(off, -1)
        return CollectiveOperator(n, kind, matrix=_frozen(mat.astype(complex)))
    if kind == "Jy":
        # J_y = (J_+ - J_-)/(2i); J_+ raises m, i.e. sits below the diagonal here.
        off = _jx_offdiagonal(n)
        mat = -1j * np.diag(off, -1) + 1j * np.diag(off, 1)
        return CollectiveOperator(n, kind, matrix=_frozen(mat))
    raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")


# ---------------------------------------------------------------------------
# Rotations about x
# ---------------------------------------------------------------------------

_EIG_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_EIG_LOCK = threading.Lock()


def jx_eigensystem(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (exactly -N/2..N/2) and orthogonal eigenvectors of J_x.

    Cached per N; columns of the returned matrix are eigenvectors in
    ascending eigenvalue order.
    """
    n = _check_n(n)
    cached = _EIG_CACHE.get(n)
    if cached is not None:
        return cached
    off = _jx_offdiagonal(n)
    w, vecs = eigh_tridiagonal(np.zeros(n + 1), off)
    exact = m_values(n)
    if np.abs(w - exact).max() > 1e-10 * max(1, n):
        raise FloatingPointError(f"J_x spectrum for N={n} deviates from -N/2..N/2")
    # one Newton-Schulz step pulls orthogonality from ~1e-14 to ~1e-16
    vecs = vecs @ (1.5 * np.eye(n + 1) - 0.5 * vecs.T @ vecs)
    entry = (_frozen(exact), _frozen(vecs))
    with _EIG_LOCK:
        return _EIG_CACHE.setdefault(n, entry)


def rotation_x(n: int, theta: float) -> np.ndarray:
    """Dense matrix of exp(i theta J_x)."""
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    w, vecs = jx_eigensystem(n)
    return (vecs * np.exp(1j * theta * w)) @ vecs.T


def rotate_x(vec: np.ndarray, theta: float) -> np.ndarray:
    """exp(i theta J_x) applied to an amplitude vector, O(N^2)."""
    w, vecs = jx_eigensystem(len(vec) - 1)
    return vecs @ (np.exp(1j * theta * w) * (vecs.T @ vec))


def jz_phase(vec: np.ndarray, phi: float) -> np.ndarray:
    """exp(i phi J_z) applied to an amplitude vector."""
    return np.exp(1j * phi * m_values(len(vec) - 1)) * vec


# ---------------------------------------------------------------------------
# Named states
# ---------------------------------------------------------------------------


def basis_state(n: int, m: float) -> DickeKet:
    n = _check_n(n)
    amps = np.zeros(n + 1, dtype=complex)
    amps[_index(n, m)] = 1.0
    return DickeKet(n, amps)


def polarized_state(n: int) -> DickeKet:
    """All N atoms in mode a, |(N/2)_z>."""
    return basis_state(n, _check_n(n) / 2)


def optimal_state(n: int) -> DickeKet:
    """(|0> + (|N/2> + |-N/2>)/sqrt 2)/sqrt 2: extremal-variance state of A."""
    n = _check_n(n)
    _require_even(n, "optimal_state")
    amps = np.zeros(n + 1, dtype=complex)
    amps[n // 2] = 1 / np.sqrt(2)
    amps[0] = amps[-1] = 0.5
    return DickeKet(n, amps)


def css_state(n: int, theta: float, phi: float) -> DickeKet:
    """Coherent spin state exp(i phi J_z) exp(i theta J_x) |(N/2)_z>."""
    ket = polarized_state(n).amplitudes
    return DickeKet(n, jz_phase(rotate_x(ket, theta), phi))


def css_state_logdomain(n: int, theta: float, phi: float) -> DickeKet:
    """Closed-form coherent spin state with binomial weights in log-gamma form.

    <m| exp(i theta J_x) |j> = sqrt(C(N, j+m)) cos(theta/2)^(j+m) (i sin(theta/2))^(j-m).
    Usable for N in the thousands where C(N, k) overflows.
    """
    n = _check_n(n)
    m = m_values(n)
    up = n / 2 + m  # j + m
    down = n / 2 - m  # j - m
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    log_binom = 0.5 * (gammaln(n + 1) - gammaln(up + 1) - gammaln(down + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_c, log_s = np.log(abs(c)), np.log(abs(s))
        # 0 * log(0) is masked out: a zero power contributes a factor 1
        log_mag = log_binom + np.where(up > 0, up * log_c, 0.0) + np.where(down > 0, down * log_s, 0.0)
    phase = phi * m + down * np.pi / 2
    phase = phase + np.pi * up * (c < 0) + np.pi * down * (s < 0)
    return DickeKet(n, np.exp(log_mag + 1j * phase))


def x_extremal_state(n: int, sign: int) -> DickeKet:
    """|(+-N/2)_x>, phase fixed so that the overlap with |(N/2)_z> is real positive."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    amps = css_state(n, np.pi / 2, sign * np.pi / 2).amplitudes
    # css(pi/2, +-pi/2) has overlap exp(+-i pi N/4) cos(pi/4)^N with |N/2>
    return DickeKet(n, amps * np.exp(-1j * sign * np.pi * n / 4))


def z_lower_state(n: int) -> DickeKet:
    """|(-N/2)_z> defined by rotation, exp(-i pi J_x)|(N/2)_z>.

    Differs from the bare Fock vector (b^dag)^N/sqrt(N!)|0> by exp(-i N pi/2).
    """
    return DickeKet(n, rotate_x(polarized_state(n).amplitudes, -np.pi))


def cat_state_analytic(n: int) -> DickeKet:
    """Superposition N e^{iN pi/2} (|eta_x> + e^{-3i pi/4} |eta_z>) reached by OAT at chi tau = pi/4."""
    n = _check_n(n)
    _require_even(n, "cat_state_analytic")
    global_phase = np.exp(1j * n * np.pi / 2)
    eta_x = (x_extremal_state(n, 1).amplitudes + x_extremal_state(n, -1).amplitudes) / np.sqrt(2)
    eta_z = (polarized_state(n).amplitudes - global_phase * z_lower_state(n).amplitudes) / np.sqrt(2)
    raw = global_phase * (eta_x + np.exp(-3j * np.pi / 4) * eta_z)
    # exact normalization from the eta_x / eta_z overlap, not 1/sqrt(2)
    overlap = np.vdot(eta_x, eta_z)
    norm_sq = 2 + 2 * np.real(np.exp(-3j * np.pi / 4) * overlap)
    return DickeKet(n, raw / np.sqrt(norm_sq))


# ---------------------------------------------------------------------------
# Expectation values
# ---------------------------------------------------------------------------


def _check_dims(op: CollectiveOperator, state: State) -> None:
    if op.n != state.n:
        raise DimensionError(f"operator acts on N={op.n} but state has N={state.n}")


def expectation(op: CollectiveOperator, state: State) -> float:
    _check_dims(op, state)
    if isinstance(state, DickeKet):
        a = state.amplitudes
        if op.is_diagonal:
            val = np.dot(op.diag, np.abs(a) ** 2)
        else:
            val = np.vdot(a, op.matrix @ a)
    else:
        if op.is_diagonal:
            val = np.dot(op.diag, np.diag(state.matrix))
        else:
            val = np.trace(op.matrix @ state.matrix)
    if abs(np.imag(val)) > 1e-10 * max(1.0, abs(val)):
        raise FloatingPointError(f"<{op.kind}> has imaginary part {np.imag(val):.3g}")
    return float(np.real(val))


def variance(op: CollectiveOperator, state: State) -> float:
    mean = expectation(op, state)
    if op.is_diagonal:
        sq = CollectiveOperator(op.n, op.kind, diag=op.diag**2)
    else:
        sq = CollectiveOperator(op.n, op.kind, matrix=op.matrix @ op.matrix)
    return expectation(sq, state) - mean**2


def fidelity(a: DickeKet, b: DickeKet) -> float:
    """|<a|b>|^2; the only sanctioned comparison between kets."""
    if a.n != b.n:
        raise DimensionError(f"N mismatch: {a.n} vs {b.n}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def density_fidelity(rho: DickeDensity, ket: DickeKet) -> float:
    a = ket.amplitudes
    return float(np.real(np.vdot(a, rho.matrix @ a)))
