"""Grand-potential functional, its gradient and the Newton saddle search."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .ed import EigenSolution, diagonalize, lehmann_data, lehmann_green_at, lehmann_record
from .emulator import Evolution, GibbsPrepConfig, exact_gibbs, measure_all_correlations, prepare_gibbs_riera
from .greens import FrequencyGrid, NambuGreensFunction, TimeGrid, nambu_time_series, retarded_transform
from .model import (ClusterModel, ConfigurationError, VariationalParams, build_cluster_hamiltonian,
                    k_grid, perturbation_matrix)


class LogBranchWarning(UserWarning):
    """``I - V G'`` is numerically singular somewhere on the grid."""


def fermi(omega, beta: float) -> np.ndarray:
    """``1 / (1 + exp(beta omega))`` evaluated without overflow."""
    return expit(-beta * np.asarray(omega, dtype=float))


@dataclass(frozen=True)
class ClusterSolution:
    eigen: EigenSolution
    green: NambuGreensFunction

    @property
    def omega_prime(self) -> float:
        """Cluster grand potential ``-T ln Z``."""
        return self.eigen.grand_potential


@dataclass(frozen=True)
class LehmannBackend:
    """Cluster Green's function straight from the spectral sum."""

    grid: FrequencyGrid = field(default_factory=lambda: TimeGrid().frequency_grid())

    def solve(self, model: ClusterModel, v: VariationalParams) -> ClusterSolution:
        sol = diagonalize(build_cluster_hamiltonian(model, v), model.beta)
        data = lehmann_data(sol, model.L_c)
        mats = lehmann_green_at(data, self.grid.omega + 1j * self.grid.eta)
        return ClusterSolution(sol, NambuGreensFunction(self.grid.omega, mats, self.grid.eta))


@dataclass(frozen=True)
class TimeDomainBackend:
    """Cluster Green's function from correlation traces on a time grid.

    ``source="lehmann"`` evaluates the traces from the spectrum;
    ``source="emulator"`` runs the ancilla circuit on an exact Gibbs input,
    or on the phase-estimation state when ``gibbs_prep`` is given.
    """

    time_grid: TimeGrid = field(default_factory=TimeGrid)
    source: str = "lehmann"
    evolution: Evolution = field(default_factory=Evolution)
    shots: int | None = None
    seed: int | None = None
    gibbs_prep: GibbsPrepConfig | None = None

    def __post_init__(self):
        if self.source not in ("lehmann", "emulator"):
            raise ConfigurationError(f"unknown trace source {self.source!r}")

    def traces(self, model: ClusterModel, v: VariationalParams, sol: EigenSolution | None = None):
        H = build_cluster_hamiltonian(model, v)
        tau = self.time_grid.tau
        if self.source == "lehmann":
            sol = sol or diagonalize(H, model.beta)
            return lehmann_record(sol, model.L_c, tau)
        if self.gibbs_prep is None:
            rho = exact_gibbs(H, model.beta)
        else:
            cfg = replace(self.gibbs_prep, target_beta=model.beta)
            rho = prepare_gibbs_riera(H, cfg, self.seed).rho
        return measure_all_correlations(rho, H, model.L_c, tau, self.evolution, self.shots, self.seed)

    def solve(self, model: ClusterModel, v: VariationalParams) -> ClusterSolution:
        sol = diagonalize(build_cluster_hamiltonian(model, v), model.beta)
        record = self.traces(model, v, sol)
        green = retarded_transform(nambu_time_series(record), self.time_grid)
        return ClusterSolution(sol, green)


def _log_det_phase(model: ClusterModel, V: np.ndarray, green: NambuGreensFunction) -> np.ndarray:
    """Continuous ``arg det[I - V G'(omega + i eta)]`` along the grid."""
    M = np.eye(V.shape[0]) - np.einsum("ab,wbc->wac", V, green.matrices)
    det = np.linalg.det(M)
    tiny = np.abs(det) < 1e-12
    if np.any(tiny):
        idx = np.flatnonzero(tiny)
        warnings.warn(f"near-singular I - V G' at omega = {green.omega[idx[:5]]}", LogBranchWarning,
                      stacklevel=3)
    return np.unwrap(np.angle(det))


def grand_potential(model: ClusterModel, v: VariationalParams, green: NambuGreensFunction,
                    omega_prime_cluster: float) -> float:
    """Grand potential per lattice site.

    ``Omega = Omega'/L - (1/N) sum_k int f(omega) (-1/pi) arg det[I - V G'] domega
    - (1/N) sum_k Tr V_hole(k)``

    The last term restores the normal ordering of the hole block of the
    Nambu spinor; it vanishes when ``V`` does.
    """
    L = model.L_c
    ks = k_grid(model)
    n_sites = len(ks) * L
    weight = fermi(green.omega, model.beta) * green.d_omega
    integral = 0.0
    hole_trace = 0.0
    for k in ks:
        V = perturbation_matrix(model, v, k)
        phase = _log_det_phase(model, V, green)
        integral += -np.dot(weight, phase) / np.pi
        hole_trace += np.trace(V[L:, L:]).real
    return float(omega_prime_cluster / L - integral / n_sites - hole_trace / n_sites)


def omega_functional(model: ClusterModel, v: VariationalParams, backend) -> float:
    """Evaluate the functional with a fresh cluster solution at ``v``."""
    sol = backend.solve(model, v)
    return grand_potential(model, v, sol.green, sol.omega_prime)


DEFAULT_ACTIVE = ("mu_prime", "delta_prime")


def gradient(model: ClusterModel, v: VariationalParams, backend, h: float = 1e-3,
             names=DEFAULT_ACTIVE, functional=None) -> np.ndarray:
    """Central-difference gradient in the named variational fields."""
    if not h > 0:
        raise ValueError("h must be positive")
    f = functional or (lambda p: omega_functional(model, p, backend))
    x = v.as_array(names)
    g = np.zeros(len(names))
    for i in range(len(names)):
        e = np.zeros(len(names))
        e[i] = h
        g[i] = (f(v.with_values(names, x + e)) - f(v.with_values(names, x - e))) / (2 * h)
    return g


@dataclass(frozen=True)
class VcaResult:
    params_star: VariationalParams
    omega_value: float
    gradient_norm: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def find_saddle(model: ClusterModel, v0: VariationalParams, backend=None, h: float = 1e-3,
                eps_omega: float = 1e-5, max_iter: int = 50, names=DEFAULT_ACTIVE,
                bounds: tuple[float, float] = (-10.0, 10.0), max_step: float = 0.5,
                functional=None) -> VcaResult:
    """Newton iteration on the gradient with a finite-difference Hessian.

    A singular Hessian switches to damped descent on ``|grad|^2``.  Leaving
    ``bounds`` ends the search with ``converged=False``.
    """
    backend = backend or LehmannBackend()
    raw = functional or (lambda p: omega_functional(model, p, backend))
    cache: dict = {}

    def f(p: VariationalParams) -> float:
        key = tuple(np.round(p.as_array(), 12))
        if key not in cache:
            cache[key] = raw(p)
        return cache[key]

    names = tuple(names)
    n = len(names)
    x = v0.as_array(names)
    lo, hi = bounds
    if np.any(x < lo) or np.any(x > hi):
        raise ConfigurationError("starting point outside the parameter bounds")

    def grad_at(y):
        return gradient(model, v0.with_values(names, y), backend, h, names, f)

    diag = {"fallback_steps": 0, "history": []}
    g = grad_at(x)
    it = 0
    while np.linalg.norm(g) > eps_omega and it < max_iter:
        it += 1
        hess = np.zeros((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            hess[:, j] = (grad_at(x + e) - grad_at(x - e)) / (2 * h)
        hess = 0.5 * (hess + hess.T)
        if np.all(np.isfinite(hess)) and np.linalg.cond(hess) < 1e12:
            step = -np.linalg.solve(hess, g)
        else:
            diag["fallback_steps"] += 1
            step = -hess.T @ g if np.all(np.isfinite(hess)) else -g
        norm = np.linalg.norm(step)
        if norm > max_step:
            step *= max_step / norm
        # backtrack on |grad|^2
        for _ in range(6):
            trial = x + step
            g_trial = grad_at(trial)
            if np.linalg.norm(g_trial) < np.linalg.norm(g) or np.linalg.norm(step) < h:
                break
            step = 0.5 * step
        x, g = trial, g_trial
        diag["history"].append((x.copy(), float(np.linalg.norm(g))))
        if np.any(x < lo) or np.any(x > hi):
            diag["reason"] = "left parameter bounds"
            break
    v_star = v0.with_values(names, x)
    gnorm = float(np.linalg.norm(g))
    diag["evaluations"] = len(cache)
    return VcaResult(v_star, f(v_star), gnorm, it, gnorm <= eps_omega, diag)


def potthoff_scan(model: ClusterModel, backend, mu_values, delta_values,
                  base: VariationalParams | None = None) -> np.ndarray:
    """Functional on a ``(mu', Delta')`` grid, shape ``(len(mu), len(delta))``."""
    base = base or VariationalParams()
    out = np.zeros((len(mu_values), len(delta_values)))
    for i, mu_p in enumerate(mu_values):
        for j, d_p in enumerate(delta_values):
            out[i, j] = omega_functional(model, base.replace(mu_prime=float(mu_p), delta_prime=float(d_p)),
                                         backend)
    return out


def density_from_potential(model: ClusterModel, v: VariationalParams, backend, h: float = 1e-3) -> float:
    """Filling per spin orbital, ``-(1/2) dOmega/dmu`` by central difference."""
    up = omega_functional(replace(model, mu=model.mu + h), v, backend)
    down = omega_functional(replace(model, mu=model.mu - h), v, backend)
    return float(-(up - down) / (2 * h) / 2)
