"""Exact diagonalization of a cluster and Lehmann-form correlation functions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp, polygamma

from .greens import CorrelationRecord, FrequencyGrid, NambuGreensFunction
from .model import ClusterModel, VariationalParams, lattice_k_grid, perturbation_matrix
from .operators import DomainError, PauliOperator, jw_annihilate, jw_create, jw_hermitian_pair, orbitals

MAX_QUBITS = 14


class ResourceGuardError(RuntimeError):
    """Raised when a request exceeds the desk-scale dimension guard."""


class AccuracyWarning(UserWarning):
    """Emitted when a truncated sum misses its requested tolerance."""


@dataclass(frozen=True)
class EigenSolution:
    """Full spectrum of a cluster Hamiltonian at inverse temperature ``beta``."""

    energies: np.ndarray
    states: np.ndarray
    beta: float

    @cached_property
    def log_Z(self) -> float:
        return float(logsumexp(-self.beta * self.energies))

    @property
    def Z(self) -> float:
        return float(np.exp(self.log_Z))

    @cached_property
    def weights(self) -> np.ndarray:
        """Normalized Boltzmann weights ``exp(-beta E_n)/Z``."""
        return np.exp(-self.beta * self.energies - self.log_Z)

    @property
    def grand_potential(self) -> float:
        """``-T ln Z`` of the whole cluster."""
        return -self.log_Z / self.beta

    def to_eigenbasis(self, op) -> np.ndarray:
        mat = op.to_matrix() if isinstance(op, PauliOperator) else np.asarray(op)
        return self.states.conj().T @ mat @ self.states


def diagonalize(H, beta: float, max_qubits: int = MAX_QUBITS) -> EigenSolution:
    """Dense diagonalization of a Hermitian operator.

    Parameters
    ----------
    H : PauliOperator or ndarray
    beta : float
        Inverse temperature (``>= 0``).
    max_qubits : int
        Register size above which a :class:`ResourceGuardError` is raised.
    """
    if beta < 0:
        raise DomainError("beta must be non-negative")
    if isinstance(H, PauliOperator):
        if H.n_qubits > max_qubits:
            raise ResourceGuardError(f"{H.n_qubits} qubits exceed the guard of {max_qubits}")
        if not H.is_hermitian():
            raise DomainError("Hamiltonian is not Hermitian")
        mat = H.to_matrix()
    else:
        mat = np.asarray(H, dtype=complex)
        if mat.shape[0] > 2 ** max_qubits:
            raise ResourceGuardError("matrix exceeds the dimension guard")
        if not np.allclose(mat, mat.conj().T, atol=1e-12):
            raise DomainError("Hamiltonian is not Hermitian")
    energies, states = np.linalg.eigh(mat)
    resid = np.linalg.norm(mat @ states - states * energies, axis=0)
    if np.max(resid) > 1e-9 * max(1.0, np.max(np.abs(energies))):
        raise ArithmeticError(f"eigen-residual {np.max(resid):.2e} too large")
    return EigenSolution(energies, states, float(beta))


def nambu_operators(L_c: int) -> list[PauliOperator]:
    """``[c_{1 up}, ..., c_{L up}, c^dag_{1 down}, ..., c^dag_{L down}]``."""
    ups = [jw_annihilate(i, "up", L_c) for i in range(1, L_c + 1)]
    downs = [jw_create(i, "down", L_c) for i in range(1, L_c + 1)]
    return ups + downs


def hermitian_observables(L_c: int) -> list[PauliOperator]:
    """``[X_0, Y_0, X_1, Y_1, ...]`` over Nambu orbitals."""
    out = []
    for site, spin in orbitals(L_c):
        x, y = jw_hermitian_pair(site, spin, L_c)
        out += [x, y]
    return out


@dataclass(frozen=True)
class LehmannData:
    """Pole data of the Nambu Green's function.

    ``G_ab(z) = sum_r Q[a, r] P[r] conj(Q[b, r]) / (z - omega_mn[r])``.
    """

    omega_mn: np.ndarray
    P_mn: np.ndarray
    Q: np.ndarray


def lehmann_data(sol: EigenSolution, L_c: int, tol: float = 1e-12) -> LehmannData:
    """Collect the nonzero ``(m, n)`` columns of the amplitude matrix."""
    E = sol.energies
    p = sol.weights
    amps = np.stack([sol.to_eigenbasis(op) for op in nambu_operators(L_c)])  # <m|Psi_a|n>
    mask = np.any(np.abs(amps) > tol, axis=0)
    m_idx, n_idx = np.nonzero(mask)
    return LehmannData(E[n_idx] - E[m_idx], p[m_idx] + p[n_idx], amps[:, m_idx, n_idx])


def lehmann_green_at(data: LehmannData, z: np.ndarray) -> np.ndarray:
    """Nambu Green's function at complex frequencies ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    denom = data.P_mn[None, :] / (z[:, None] - data.omega_mn[None, :])
    return np.einsum("ar,wr,br->wab", data.Q, denom, data.Q.conj(), optimize=True)


def lehmann_green(sol: EigenSolution, omega_grid, eta: float = np.pi / 50,
                  L_c: int | None = None) -> NambuGreensFunction:
    """Retarded Nambu Green's function ``G(omega + i eta)`` on a grid."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    omega = omega_grid.omega if isinstance(omega_grid, FrequencyGrid) else np.asarray(omega_grid, float)
    if not np.all(np.isfinite(omega)):
        raise DomainError("frequency grid must be finite")
    if L_c is None:
        L_c = int(round(np.log2(sol.states.shape[0]))) // 2
    data = lehmann_data(sol, L_c)
    return NambuGreensFunction(omega, lehmann_green_at(data, omega + 1j * eta), float(eta))


def _pair_weights(sol: EigenSolution, A: np.ndarray, B: np.ndarray):
    p = sol.weights
    W = (p[:, None] + p[None, :]) * A.T * B  # W[m, n] = (p_m + p_n) <n|A|m> <m|B|n>
    dE = sol.energies[:, None] - sol.energies[None, :]
    mask = np.abs(W) > 1e-15
    return W[mask], dE[mask]


def lehmann_correlation(sol: EigenSolution, sigma_mu, sigma_nu, tau) -> np.ndarray:
    """``C(tau) = sum_mn exp(-i tau (E_m - E_n)) (p_m + p_n) <n|mu|m><m|nu|n>``."""
    tau = np.asarray(tau, dtype=float)
    return _corr_eigen(sol, sol.to_eigenbasis(sigma_mu), sol.to_eigenbasis(sigma_nu), tau)


def lehmann_moments(sol: EigenSolution, sigma_mu, sigma_nu, s_max: int) -> np.ndarray:
    """``C^(s) = (-i)^s sum_mn A^mn (E_m - E_n)^s`` for ``s = 0..s_max``."""
    A = sol.to_eigenbasis(sigma_mu)
    B = sol.to_eigenbasis(sigma_nu)
    w, dE = _pair_weights(sol, A, B)
    return np.array([(-1j) ** s * np.sum(w * dE ** s) for s in range(s_max + 1)])


def lehmann_record(sol: EigenSolution, L_c: int, tau) -> CorrelationRecord:
    """Traces for every ordered pair of X/Y observables."""
    tau = np.asarray(tau, dtype=float)
    ops = [sol.to_eigenbasis(o) for o in hermitian_observables(L_c)]
    n = len(ops)
    values = np.zeros((n, n, len(tau)))
    for a in range(n):
        for b in range(n):
            values[a, b] = _corr_eigen(sol, ops[a], ops[b], tau).real
    return CorrelationRecord(tau, values)


def _corr_eigen(sol: EigenSolution, A: np.ndarray, B: np.ndarray, tau: np.ndarray) -> np.ndarray:
    w, dE = _pair_weights(sol, A, B)
    if w.size == 0:
        return np.zeros(len(tau), dtype=complex)
    return np.exp(-1j * np.outer(tau, dE)) @ w


def matsubara_occupation(model: ClusterModel, v: VariationalParams, sol: EigenSolution,
                         n_freq: int = 4096, tol: float = 1e-4, k_points=None) -> np.ndarray:
    """Momentum distribution ``N(k)`` from a Matsubara sum of the CPT function.

    Uses ``N(k) = 1/2 + 2T sum_{n>=0} Re G(k, i w_n)`` with the cluster
    Green's function taken at exact Matsubara frequencies.  The tail beyond
    ``n_freq`` is added from the ``1/(i w)^2`` moment; an
    :class:`AccuracyWarning` reports the achieved tolerance when the moment
    estimate is not stable to ``tol``.
    """
    from .observables import cpt_matrices, periodize

    T = model.T
    wn = (2 * np.arange(n_freq) + 1) * np.pi * T
    data = lehmann_data(sol, model.L_c)
    g_cluster = lehmann_green_at(data, 1j * wn)
    ks = lattice_k_grid(model) if k_points is None else np.atleast_2d(k_points)
    L = model.L_c
    out = np.zeros(len(ks))
    worst = 0.0
    for idx, k in enumerate(ks):
        big = cpt_matrices(g_cluster, perturbation_matrix(model, v, k))
        g = periodize(model, k, big[:, :L, :L])
        m1_last = -wn[-1] ** 2 * g[-1].real
        m1_prev = -wn[-2] ** 2 * g[-2].real
        tail = -m1_last * polygamma(1, n_freq + 0.5) / (2 * np.pi ** 2 * T)
        worst = max(worst, abs((m1_last - m1_prev) * polygamma(1, n_freq + 0.5) / (2 * np.pi ** 2 * T)))
        out[idx] = 0.5 + 2 * T * np.sum(g.real) + tail
    if worst > tol:
        warnings.warn(f"Matsubara sum reached tolerance {worst:.2e} > {tol:.1e}; raise n_freq",
                      AccuracyWarning, stacklevel=2)
    return out
