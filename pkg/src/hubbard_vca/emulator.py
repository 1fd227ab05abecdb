"""Density-matrix emulation of the correlation-measurement circuit.

The system register holds a thermal state of the cluster; a single ancilla
controls ``O(tau) = U^dag(tau) sigma_mu U(tau) sigma_nu`` between two
Hadamard gates, so that ``P(M=0) = (1 + Re Tr[O rho]) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .ed import ResourceGuardError, diagonalize, hermitian_observables
from .greens import CorrelationRecord
from .model import ConfigurationError
from .operators import DomainError, PauliOperator, PauliString

MAX_DENSE_QUBITS = 14
MAX_BRANCH_AMPLITUDES = 2 ** 26


def _as_matrix(op) -> np.ndarray:
    return op.to_matrix() if isinstance(op, PauliOperator) else np.asarray(op, dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix on ``n`` qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = m.shape[0]
        if m.ndim != 2 or m.shape != (dim, dim) or dim & (dim - 1):
            raise DomainError("density matrix must be square with a power-of-two dimension")
        if abs(np.trace(m) - 1) > 1e-10:
            raise DomainError(f"trace {np.trace(m).real:.3e} differs from one")
        if not np.allclose(m, m.conj().T, atol=1e-10):
            raise DomainError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise DomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2 ** n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def from_state(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def trace_distance(self, other: "DensityMatrix") -> float:
        return float(0.5 * np.abs(np.linalg.eigvalsh(self.matrix - other.matrix)).sum())

    def mix(self, other: "DensityMatrix", weight: float) -> "DensityMatrix":
        """``weight * self + (1 - weight) * other``."""
        return DensityMatrix(weight * self.matrix + (1 - weight) * other.matrix)


def exact_gibbs(H, beta: float) -> DensityMatrix:
    """``exp(-beta H) / Z`` built from the exact spectrum."""
    sol = diagonalize(H, beta)
    rho = (sol.states * sol.weights) @ sol.states.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


# --------------------------------------------------------------------------- evolution

def commuting_groups(H: PauliOperator) -> list[PauliOperator]:
    """Greedy partition of the Pauli terms into mutually commuting groups."""
    groups: list[dict[str, complex]] = []
    for label, coef in H.terms.items():
        s = PauliString(label)
        for g in groups:
            if all(PauliString(other).commutes_with(s) for other in g):
                g[label] = coef
                break
        else:
            groups.append({label: coef})
    return [PauliOperator(H.n_qubits, g) for g in groups]


def _hermitian_exp(mat: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t mat)`` for Hermitian ``mat``."""
    w, v = np.linalg.eigh(mat)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def trotter_unitary(H, tau: float, n_T: int, groups: list | None = None) -> np.ndarray:
    """First-order product formula ``(prod_j exp(-i H_j tau / n_T))^n_T``.

    Parameters
    ----------
    H : PauliOperator
        Hamiltonian; ignored for the splitting when ``groups`` is given.
    groups : list of PauliOperator, optional
        Parts summing to ``H``.  Defaults to :func:`commuting_groups`.
    """
    if n_T < 1:
        raise DomainError("n_T must be >= 1")
    parts = commuting_groups(H) if groups is None else list(groups)
    dim = 2 ** parts[0].n_qubits
    step = np.eye(dim, dtype=complex)
    for part in parts:
        step = _hermitian_exp(_as_matrix(part), tau / n_T) @ step
    return np.linalg.matrix_power(step, n_T)


def exact_unitary(H, tau: float) -> np.ndarray:
    return _hermitian_exp(_as_matrix(H), tau)


@dataclass(frozen=True)
class Evolution:
    """How ``U(tau)`` is realized: exact exponential or Trotter steps."""

    method: str = "exact"
    n_T: int = 1
    groups: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.method not in ("exact", "trotter"):
            raise DomainError(f"unknown evolution {self.method!r}")
        if self.n_T < 1:
            raise DomainError("n_T must be >= 1")

    def unitaries(self, H, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.method == "exact":
            w, v = np.linalg.eigh(_as_matrix(H))
            phases = np.exp(-1j * np.outer(tau, w))
            return np.einsum("ij,tj,kj->tik", v, phases, v.conj(), optimize=True)
        groups = list(self.groups) or commuting_groups(H)
        return np.stack([trotter_unitary(H, t, self.n_T, groups) for t in tau])


# --------------------------------------------------------------------------- measurement

@dataclass(frozen=True)
class MeasurementTrace:
    """Ancilla outcome probabilities and the recovered correlation."""

    tau: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    @property
    def correlation(self) -> np.ndarray:
        return 2.0 * (self.p0 - self.p1)


def _check_observable(sigma: np.ndarray):
    if not np.allclose(sigma, sigma.conj().T, atol=1e-12):
        raise DomainError("observable is not Hermitian")
    if not np.allclose(sigma @ sigma, np.eye(len(sigma)), atol=1e-10):
        raise DomainError("observable must square to the identity")


def _sample(p0: np.ndarray, shots: int | None, rng) -> np.ndarray:
    p0 = np.clip(p0, 0.0, 1.0)
    if not shots:
        return p0
    return rng.binomial(shots, p0) / shots


def _probabilities(rho: np.ndarray, Us: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """``P(M=0) = Tr[(I + O) rho (I + O)^dag] / 4`` for each ``U`` in the batch."""
    O = np.einsum("tji,jk,tkl,lm->tim", Us.conj(), mu, Us, nu, optimize=True)
    O = O + np.eye(len(rho))
    return 0.25 * np.einsum("tij,jk,tik->t", O, rho, O.conj(), optimize=True).real


def measure_correlation(rho_in: DensityMatrix, H, sigma_mu, sigma_nu, tau,
                        evolution: Evolution | None = None, shots: int | None = None,
                        seed: int | None = None, unitaries: np.ndarray | None = None) -> MeasurementTrace:
    """Emulate the ancilla-controlled correlation circuit on a time grid.

    ``shots=None`` returns exact probabilities; otherwise each ``P(M=0)`` is
    a seeded binomial estimate.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    mu, nu = _as_matrix(sigma_mu), _as_matrix(sigma_nu)
    _check_observable(mu)
    _check_observable(nu)
    if unitaries is None:
        unitaries = (evolution or Evolution()).unitaries(H, tau)
    p0 = _sample(_probabilities(rho_in.matrix, unitaries, mu, nu), shots, np.random.default_rng(seed))
    return MeasurementTrace(tau, p0, 1.0 - p0)


def measure_all_correlations(rho_in: DensityMatrix, H, L_c: int, tau,
                             evolution: Evolution | None = None, shots: int | None = None,
                             seed: int | None = None) -> CorrelationRecord:
    """Traces for all ``(2 L_c)^2 * 4`` ordered X/Y pairs, one shared set of unitaries."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    Us = (evolution or Evolution()).unitaries(H, tau)
    ops = [o.to_matrix() for o in hermitian_observables(L_c)]
    rng = np.random.default_rng(seed)
    n = len(ops)
    values = np.zeros((n, n, len(tau)))
    for a in range(n):
        for b in range(n):
            p0 = _sample(_probabilities(rho_in.matrix, Us, ops[a], ops[b]), shots, rng)
            values[a, b] = 2.0 * (2.0 * p0 - 1.0)
    return CorrelationRecord(tau, values)


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _controlled(gate: np.ndarray) -> np.ndarray:
    """Ancilla is the highest qubit; acts with ``gate`` when the ancilla is ``|1>``."""
    d = len(gate)
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = gate
    return out


def hadamard_test_circuit(rho_in: DensityMatrix, U: np.ndarray, sigma_mu, sigma_nu) -> float:
    """Gate-by-gate emulation of one circuit shot distribution; returns ``P(M=0)``.

    Sequence: H on ancilla, controlled-sigma_nu, U, controlled-sigma_mu,
    U^dag, H on ancilla.
    """
    d = rho_in.dim
    if 2 * d > 2 ** MAX_DENSE_QUBITS:
        raise ResourceGuardError("register too large for the gate-level circuit")
    eye = np.eye(d)
    zero = np.zeros((2, 2))
    zero[0, 0] = 1.0
    rho = np.kron(zero, rho_in.matrix)
    gates = [np.kron(_HADAMARD, eye), _controlled(_as_matrix(sigma_nu)), np.kron(np.eye(2), U),
             _controlled(_as_matrix(sigma_mu)), np.kron(np.eye(2), U.conj().T), np.kron(_HADAMARD, eye)]
    for g in gates:
        rho = g @ rho @ g.conj().T
    return float(np.trace(rho[:d, :d]).real)


# --------------------------------------------------------------------------- Gibbs preparation

@dataclass(frozen=True)
class GibbsPrepConfig:
    """Register sizes and bath scale for the phase-estimation Gibbs sampler.

    ``m`` bath spins with splitting ``sqrt(lam / m) * ||H||``, a phase
    register of ``r`` qubits of which the top ``q`` are read out.
    """

    m: int = 4
    r: int = 8
    q: int = 4
    lam: float = 1.0
    target_beta: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("bath needs m >= 1 spins")
        if not (self.r > self.q >= 1):
            raise ConfigurationError("register widths must satisfy r > q >= 1")
        if not self.lam > 0:
            raise ConfigurationError("lam must be positive")


@dataclass(frozen=True)
class GibbsPrepResult:
    rho: DensityMatrix
    s_star: int
    beta_implied: float
    delta_beta: float
    beta_fit: float
    runs_used: int
    outcome_probability: float
    trace_distance: float
    distance_bound: float
    runs_bound: float
    eta: float
    system_norm: float
    bath_norm: float


def phase_register_amplitudes(phi: np.ndarray, r: int) -> np.ndarray:
    """Amplitudes ``alpha_s(phi)`` after phase kickback and inverse QFT.

    Emulates the ``r``-qubit register, returning shape ``(len(phi), 2**r)``.
    """
    N = 2 ** r
    x = np.arange(N)
    kicked = np.exp(2j * np.pi * np.outer(np.atleast_1d(phi), x)) / N
    return np.fft.fft(kicked, axis=-1)


def alpha_closed_form(phi: float, s: np.ndarray, r: int) -> np.ndarray:
    """Geometric-sum expression for the phase-register amplitudes."""
    N = 2 ** r
    s = np.asarray(s, dtype=float)
    num = 1 - np.exp(2j * np.pi * (N * phi - s))
    den = 1 - np.exp(2j * np.pi * (phi - s / N))
    out = np.empty(s.shape, dtype=complex)
    small = np.abs(den) < 1e-12
    out[small] = 1.0
    out[~small] = num[~small] / den[~small] / N
    return out


def simulated_beta(s_star, q: int, eta: float, system_norm: float, bath_norm: float):
    """Inverse temperature implied by a readout ``s_star``."""
    return 4.0 / eta * (0.5 - 2.0 ** -q * np.asarray(s_star) * (1 + system_norm / bath_norm))


def beta_resolution(q: int, eta: float, system_norm: float, bath_norm: float) -> float:
    return 2.0 ** (2 - q) / eta * (1 + system_norm / bath_norm)


def preparation_bound(cfg: GibbsPrepConfig, beta: float, system_norm: float) -> float:
    """Trace-distance bound with the exponentially small ``C`` set to zero."""
    expo = 2 / cfg.lam + beta * system_norm + cfg.lam * system_norm ** 2 * beta ** 2 / 8
    first = (1 + np.log(2.0 ** (cfg.r - cfg.q)) / np.pi ** 2) * np.exp(expo) / 2.0 ** (cfg.r - cfg.q - 2)
    return float(first + 0.5 * (np.exp(2 / cfg.lam) - 1))


def runs_bound(cfg: GibbsPrepConfig, beta: float, system_norm: float) -> float:
    expo = 2 / cfg.lam + beta * system_norm + cfg.lam * system_norm ** 2 * beta ** 2 / 8
    return float(2 ** cfg.q * np.sqrt(np.pi / (2 * cfg.m)) * np.exp(expo))


def prepare_gibbs_riera(H_system, cfg: GibbsPrepConfig, rng_seed: int | None = None,
                        max_runs: int = 1_000_000) -> GibbsPrepResult:
    """Emulate phase-estimation Gibbs preparation with an uncoupled spin bath.

    The system Hamiltonian is shifted so its spectrum starts at zero, which
    puts every phase ``E / ||H_0||`` in ``[0, 1]``; the single top level at
    phase one aliases onto readout zero.  The fully mixed start state is
    diagonal in the joint eigenbasis, so the register is emulated branch by
    branch and the outcome ``s_star`` is drawn by rejection sampling until
    the readout matching ``target_beta`` appears.
    """
    mat = _as_matrix(H_system)
    if mat.shape[0] * (cfg.m + 1) * 2 ** cfg.r > MAX_BRANCH_AMPLITUDES:
        raise ResourceGuardError("register sizes exceed the emulation guard")
    energies, states = np.linalg.eigh(mat)
    levels = energies - energies[0]
    system_norm = float(levels[-1])
    if system_norm <= 0:
        raise ConfigurationError("system Hamiltonian is proportional to the identity")
    eta = np.sqrt(cfg.lam / cfg.m) * system_norm
    bath_norm = cfg.m * eta
    total_norm = system_norm + bath_norm

    b = np.arange(cfg.m + 1)
    mult = np.array([comb(cfg.m, int(x)) for x in b], dtype=float)
    phi = (levels[:, None] + eta * b[None, :]) / total_norm        # (levels, bath)
    alpha = phase_register_amplitudes(phi.ravel(), cfg.r).reshape(*phi.shape, -1)
    window = 2 ** (cfg.r - cfg.q)
    prob_s = (np.abs(alpha) ** 2).reshape(*phi.shape, 2 ** cfg.q, window).sum(axis=-1)
    weighted = prob_s * mult[None, :, None]                         # (levels, bath, s_star)
    d = len(levels) * 2 ** cfg.m
    p_outcome = weighted.sum(axis=(0, 1)) / d

    candidates = np.arange(2 ** cfg.q)
    betas = simulated_beta(candidates, cfg.q, eta, system_norm, bath_norm)
    s_star = int(np.argmin(np.abs(betas - cfg.target_beta)))
    dbeta = beta_resolution(cfg.q, eta, system_norm, bath_norm)
    if abs(betas[s_star] - cfg.target_beta) > dbeta:
        raise ConfigurationError(
            f"target beta {cfg.target_beta} unreachable: nearest readout gives {betas[s_star]:.3f}")
    if p_outcome[s_star] <= 0:
        raise ConfigurationError("selected readout has zero probability")

    rng = np.random.default_rng(rng_seed)
    runs = 0
    while True:
        runs += 1
        if rng.choice(len(p_outcome), p=p_outcome / p_outcome.sum()) == s_star:
            break
        if runs >= max_runs:
            raise ConfigurationError("readout not reached within max_runs")

    w = weighted[:, :, s_star].sum(axis=1)
    w = w / w.sum()
    rho = DensityMatrix((states * w) @ states.conj().T)
    beta_implied = float(betas[s_star])
    gibbs = np.exp(-beta_implied * levels - np.max(-beta_implied * levels))
    gibbs /= gibbs.sum()
    # both states are diagonal in the same eigenbasis
    distance = float(0.5 * np.abs(w - gibbs).sum())

    keep = w > 1e-300
    if np.ptp(levels[keep]) > 0:
        slope = np.polyfit(levels[keep], np.log(w[keep]), 1)[0]
        beta_fit = float(-slope)
    else:
        beta_fit = float("nan")

    return GibbsPrepResult(rho=rho, s_star=s_star, beta_implied=beta_implied, delta_beta=float(dbeta),
                           beta_fit=beta_fit, runs_used=runs, outcome_probability=float(p_outcome[s_star]),
                           trace_distance=distance,
                           distance_bound=preparation_bound(cfg, beta_implied, system_norm),
                           runs_bound=runs_bound(cfg, beta_implied, system_norm),
                           eta=float(eta), system_norm=system_norm, bath_norm=float(bath_norm))
