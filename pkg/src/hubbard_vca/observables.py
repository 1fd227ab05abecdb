"""Lattice Green's function from the cluster one and the derived observables."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .greens import NambuGreensFunction
from .model import ClusterModel, VariationalParams, lattice_k_grid, perturbation_matrix
from .vca import fermi

SINGULAR_COND = 1e12


def cpt_matrices(g_cluster: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``(I - G' V)^-1 G'`` for a batch of cluster matrices."""
    eye = np.eye(V.shape[0])
    return np.linalg.solve(eye - g_cluster @ V, g_cluster)


def periodize(model: ClusterModel, k, block: np.ndarray) -> np.ndarray:
    """``(1/L) sum_ij B_ij exp(-i k (r_i - r_j))`` along the leading axis."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    phase = np.exp(-1j * model.positions @ k)
    return np.einsum("i,wij,j->w", phase, block, phase.conj()) / model.L_c


@dataclass(frozen=True)
class LatticeGreens:
    """Periodized lattice Green's function on the full reciprocal grid.

    ``normal`` is the particle block, ``hole`` the ``c^dag_down`` block and
    ``anomalous`` / ``anomalous_conj`` the two off-diagonal blocks, each of
    shape ``(n_k, n_omega)``.  ``local_*`` hold the site-averaged cluster
    traces needed for the filling.
    """

    model: ClusterModel
    k: np.ndarray
    omega: np.ndarray
    eta: float
    normal: np.ndarray
    hole: np.ndarray
    anomalous: np.ndarray
    anomalous_conj: np.ndarray
    local_normal: np.ndarray
    local_hole: np.ndarray
    flagged: tuple

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])


def cpt_green(green_cluster: NambuGreensFunction, model: ClusterModel, v_star: VariationalParams,
              k_points=None) -> LatticeGreens:
    """Perturb the cluster function by ``V(k)`` and periodize.

    Frequencies where ``I - G' V`` has condition number above ``1e12`` are
    zeroed and listed in ``flagged``.
    """
    ks = lattice_k_grid(model) if k_points is None else np.atleast_2d(np.asarray(k_points, float))
    L = model.L_c
    G = green_cluster.matrices
    n_w = len(green_cluster.omega)
    out = {name: np.zeros((len(ks), n_w), dtype=complex)
           for name in ("normal", "hole", "anomalous", "anomalous_conj")}
    local_n = np.zeros(n_w, dtype=complex)
    local_h = np.zeros(n_w, dtype=complex)
    flagged = set()
    eye = np.eye(2 * L)
    for idx, k in enumerate(ks):
        V = perturbation_matrix(model, v_star, k)
        M = eye - G @ V
        bad = np.linalg.cond(M) > SINGULAR_COND
        if np.any(bad):
            flagged.update(np.flatnonzero(bad).tolist())
            M[bad] = eye
        big = np.linalg.solve(M, G)
        big[bad] = 0.0
        out["normal"][idx] = periodize(model, k, big[:, :L, :L])
        out["hole"][idx] = periodize(model, k, big[:, L:, L:])
        out["anomalous"][idx] = periodize(model, k, big[:, :L, L:])
        out["anomalous_conj"][idx] = periodize(model, k, big[:, L:, :L])
        local_n += np.trace(big[:, :L, :L], axis1=1, axis2=2) / L
        local_h += np.trace(big[:, L:, L:], axis1=1, axis2=2) / L
    return LatticeGreens(model, ks, green_cluster.omega, green_cluster.eta, out["normal"], out["hole"],
                         out["anomalous"], out["anomalous_conj"], local_n / len(ks), local_h / len(ks),
                         tuple(sorted(flagged)))


@dataclass(frozen=True)
class Spectra:
    A: np.ndarray          # (n_k, n_omega)
    F: np.ndarray          # (n_k, n_omega)
    dos: np.ndarray        # (n_omega,)
    N_k: np.ndarray        # (n_k,)
    F_k: np.ndarray        # (n_k,)


def spectra_and_distributions(lat: LatticeGreens) -> Spectra:
    """Spectral function, pair spectral function and their Fermi-weighted sums."""
    A = -lat.normal.imag / np.pi
    # spectral weight of <c_down c_up>: (i / 2 pi)(G_ph - conj(G_hp))
    F = (1j / (2 * np.pi) * (lat.anomalous - lat.anomalous_conj.conj())).real
    w = fermi(lat.omega, lat.model.beta) * lat.d_omega
    return Spectra(A=A, F=F, dos=A.mean(axis=0), N_k=A @ w, F_k=F @ w)


def _xi_reciprocal(model: ClusterModel, F_k: np.ndarray) -> float | None:
    n = model.n_lattice
    grid = F_k.reshape((n,) * model.dimension)
    norm = np.sum(np.abs(grid) ** 2)
    if norm < 1e-24:
        return None
    dk = 2 * np.pi / (n * model.a)
    grad2 = sum(np.abs((np.roll(grid, -1, ax) - np.roll(grid, 1, ax)) / (2 * dk)) ** 2
                for ax in range(model.dimension))
    return float(np.sqrt(grad2.sum() / norm))


def xi_real_space(model: ClusterModel, F_k: np.ndarray) -> float | None:
    """``sqrt(sum_r r^2 |F(r)|^2 / sum_r |F(r)|^2)`` with minimum-image distances."""
    n = model.n_lattice
    grid = F_k.reshape((n,) * model.dimension)
    F_r = np.fft.ifftn(grid)
    norm = np.sum(np.abs(F_r) ** 2)
    if norm < 1e-24:
        return None
    idx = np.fft.fftfreq(n, 1.0 / n) * model.a
    mesh = np.meshgrid(*[idx] * model.dimension, indexing="ij")
    r2 = sum(m ** 2 for m in mesh)
    return float(np.sqrt(np.sum(r2 * np.abs(F_r) ** 2) / norm))


def scalar_observables(lat: LatticeGreens, spectra: Spectra | None = None) -> dict:
    """Filling per spin orbital, pair amplitude and pair coherence length.

    ``xi`` is ``None`` when the pair amplitude vanishes everywhere.
    """
    spectra = spectra or spectra_and_distributions(lat)
    w = fermi(lat.omega, lat.model.beta) * lat.d_omega
    n_up = float(np.dot(-lat.local_normal.imag / np.pi, w))
    n_down = 1.0 - float(np.dot(-lat.local_hole.imag / np.pi, w))
    delta = float(spectra.F_k.mean())
    return {"n": 0.5 * (n_up + n_down), "n_up": n_up, "n_down": n_down, "Delta": delta,
            "xi": _xi_reciprocal(lat.model, spectra.F_k)}


def filling(model: ClusterModel, v: VariationalParams, backend) -> float:
    lat = cpt_green(backend.solve(model, v).green, model, v)
    return scalar_observables(lat)["n"]


def bisect_filling(model: ClusterModel, backend, target: float = 0.25, v: VariationalParams | None = None,
                   bracket: tuple[float, float] = (-4.0, 0.0), track_mu_prime: bool = True,
                   xtol: float = 1e-4) -> tuple[float, float]:
    """Chemical potential giving ``n = target`` per spin orbital.

    With ``track_mu_prime`` the cluster field follows ``mu`` so that ``V``
    holds only inter-cluster hopping.  Returns ``(mu, n)``.
    """
    v = v or VariationalParams()

    def residual(mu):
        m = replace(model, mu=float(mu))
        vv = v.replace(mu_prime=float(mu)) if track_mu_prime else v
        return filling(m, vv, backend) - target

    mu = brentq(residual, *bracket, xtol=xtol)
    return float(mu), float(residual(mu) + target)
