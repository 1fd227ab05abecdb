"""Cluster geometry, cluster Hamiltonian and the one-body Nambu matrices.

Nambu spinor ordering is ``(c_{1 up}, ..., c_{L up}, c^dag_{1 down}, ...,
c^dag_{L down})``.  Bloch sums use ``c_{R i} = N_c^{-1/2} sum_k e^{i k R}
c_i(k)``, so an inter-cluster bond to cluster ``R + dR`` carries ``e^{i k dR}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .operators import (DomainError, PauliOperator, jw_annihilate, jw_create,
                        jw_number, orbitals)


class ConfigurationError(ValueError):
    """Raised for physically inconsistent model or parameter requests."""


@dataclass(frozen=True)
class ClusterModel:
    """Lattice tiled by identical clusters.

    Parameters
    ----------
    dimension : int
        1 (chain) or 2 (square lattice tiled by 2x2 clusters).
    L_c : int
        Sites per cluster; must be 4 in two dimensions.
    N_c : int
        Clusters per dimension, i.e. the size of the reduced k-grid.
    t, U, mu : float
        Hopping, attractive on-site interaction (``-U n_up n_down``) and
        lattice chemical potential.
    T : float
        Temperature, ``k_B = 1``.
    a : float
        Lattice spacing.
    """

    dimension: int = 1
    L_c: int = 2
    N_c: int = 50
    t: float = 1.0
    U: float = 0.0
    mu: float = 0.0
    T: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigurationError("dimension must be 1 or 2")
        if self.L_c < 1 or self.N_c < 1:
            raise ConfigurationError("L_c and N_c must be >= 1")
        if self.dimension == 2 and self.L_c != 4:
            raise ConfigurationError("two-dimensional runs use the 2x2 cluster (L_c = 4)")
        if not self.T > 0:
            raise ConfigurationError("temperature must be positive")
        if not self.a > 0:
            raise ConfigurationError("lattice spacing must be positive")

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    @property
    def n_qubits(self) -> int:
        return 2 * self.L_c

    @property
    def linear_size(self) -> int:
        """Cluster extent in sites along each axis."""
        return self.L_c if self.dimension == 1 else 2

    @property
    def n_lattice(self) -> int:
        """Number of lattice sites along each axis."""
        return self.N_c * self.linear_size

    @cached_property
    def positions(self) -> np.ndarray:
        if self.dimension == 1:
            return self.a * np.arange(self.L_c, dtype=float)[:, None]
        return self.a * np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    @cached_property
    def superlattice(self) -> np.ndarray:
        return self.linear_size * self.a * np.eye(self.dimension)

    @cached_property
    def bonds(self) -> list[tuple[int, int, tuple[int, ...]]]:
        """Directed nearest-neighbour bonds ``(i, j, cell shift)``, 0-based sites."""
        out = []
        shifts = np.array(np.meshgrid(*[[-1, 0, 1]] * self.dimension, indexing="ij")).reshape(self.dimension, -1).T
        for i in range(self.L_c):
            for j in range(self.L_c):
                for s in shifts:
                    dR = s @ self.superlattice
                    d = self.positions[j] + dR - self.positions[i]
                    if abs(np.linalg.norm(d) - self.a) < 1e-9 * self.a:
                        out.append((i, j, tuple(int(x) for x in s)))
        return out

    @cached_property
    def intra_hopping(self) -> np.ndarray:
        """Hopping matrix inside one cluster (``-t`` on bonds)."""
        h = np.zeros((self.L_c, self.L_c))
        for i, j, s in self.bonds:
            if not any(s):
                h[i, j] = -self.t
        return h

    @cached_property
    def d_wave_signs(self) -> np.ndarray:
        """``+1`` for x bonds, ``-1`` for y bonds inside the cluster."""
        d = np.zeros((self.L_c, self.L_c))
        if self.dimension == 1:
            return d
        for i, j, s in self.bonds:
            if not any(s):
                diff = self.positions[i] - self.positions[j]
                d[i, j] = 1.0 if abs(diff[1]) < 1e-12 else -1.0
        return d

    @cached_property
    def neel_signs(self) -> np.ndarray:
        """``exp(i Q.R)`` with ``Q = (pi, pi)/a``."""
        if self.dimension == 1:
            return np.zeros(self.L_c)
        cells = np.rint(self.positions / self.a).astype(int).sum(axis=1)
        return np.where(cells % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class VariationalParams:
    """Weiss fields added to the cluster Hamiltonian."""

    mu_prime: float = 0.0
    delta_prime: float = 0.0
    delta_d_prime: float = 0.0
    M_prime: float = 0.0

    FIELDS = ("mu_prime", "delta_prime", "delta_d_prime", "M_prime")

    def as_array(self, names=FIELDS) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=float)

    def replace(self, **kw) -> "VariationalParams":
        data = {n: getattr(self, n) for n in self.FIELDS}
        data.update(kw)
        return VariationalParams(**data)

    def with_values(self, names, values) -> "VariationalParams":
        return self.replace(**{n: float(x) for n, x in zip(names, values)})


def _check_fields(model: ClusterModel, v: VariationalParams):
    if model.dimension == 1 and (v.delta_d_prime != 0.0 or v.M_prime != 0.0):
        raise ConfigurationError("d-wave and Neel fields need the 2x2 square cluster")


def cluster_hamiltonian_parts(model: ClusterModel, v: VariationalParams) -> dict[str, PauliOperator]:
    """Named pieces of the cluster Hamiltonian as Pauli operators.

    Built from products of Jordan-Wigner fermion operators so that the
    pieces match the one-body matrix of :func:`cluster_one_body` exactly.
    """
    _check_fields(model, v)
    L = model.L_c
    n = model.n_qubits
    cd = {o: jw_create(*o, L) for o in orbitals(L)}
    c = {o: jw_annihilate(*o, L) for o in orbitals(L)}
    num = {o: jw_number(*o, L) for o in orbitals(L)}
    zero = PauliOperator.zero(n)

    hop = zero
    h = model.intra_hopping
    for i in range(L):
        for j in range(L):
            if h[i, j] != 0.0:
                for s in ("up", "down"):
                    hop = hop + (cd[(i + 1, s)] * c[(j + 1, s)]) * h[i, j]

    inter = zero
    for i in range(1, L + 1):
        inter = inter + num[(i, "up")] * num[(i, "down")]
    inter = inter * (-model.U)

    local = zero
    for o in orbitals(L):
        local = local + num[o]
    local = local * (-v.mu_prime)

    def pair(i, j):
        op = cd[(i, "up")] * cd[(j, "down")]
        return op + op.adjoint()

    s_pair = zero
    for i in range(1, L + 1):
        s_pair = s_pair + pair(i, i)
    s_pair = s_pair * v.delta_prime

    d_pair = zero
    afm = zero
    if model.dimension == 2:
        d = model.d_wave_signs
        for i in range(L):
            for j in range(L):
                if d[i, j] != 0.0:
                    d_pair = d_pair + pair(i + 1, j + 1) * d[i, j]
        d_pair = d_pair * v.delta_d_prime
        for i, sgn in enumerate(model.neel_signs):
            afm = afm + (num[(i + 1, "up")] - num[(i + 1, "down")]) * sgn
        afm = afm * v.M_prime

    return {"hopping": hop, "interaction": inter, "local": local,
            "s_pair": s_pair, "d_pair": d_pair, "antiferro": afm}


def build_cluster_hamiltonian(model: ClusterModel, v: VariationalParams) -> PauliOperator:
    """Cluster Hamiltonian on ``2 L_c`` qubits."""
    parts = cluster_hamiltonian_parts(model, v)
    total = PauliOperator.zero(model.n_qubits)
    for op in parts.values():
        total = total + op
    return total


def cluster_one_body(model: ClusterModel, v: VariationalParams) -> np.ndarray:
    """Nambu one-body matrix ``[[B, C], [C^dag, D]]`` of the cluster."""
    _check_fields(model, v)
    L = model.L_c
    h = model.intra_hopping
    eye = np.eye(L)
    neel = np.diag(model.neel_signs)
    B = h - v.mu_prime * eye + v.M_prime * neel
    D = -h + v.mu_prime * eye + v.M_prime * neel
    C = v.delta_prime * eye + v.delta_d_prime * model.d_wave_signs
    out = np.zeros((2 * L, 2 * L), dtype=complex)
    out[:L, :L] = B
    out[:L, L:] = C
    out[L:, :L] = C.conj().T
    out[L:, L:] = D
    return out


def _as_k(model: ClusterModel, k) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (model.dimension,):
        raise DomainError(f"wavevector must have {model.dimension} component(s)")
    return k


def check_on_grid(model: ClusterModel, k) -> np.ndarray:
    """Validate that ``k`` lies on the reciprocal grid of the finite lattice."""
    k = _as_k(model, k)
    m = k * model.n_lattice * model.a / (2 * np.pi)
    if np.any(np.abs(m - np.rint(m)) > 1e-8):
        raise DomainError(f"wavevector {k} is not on the reciprocal grid")
    return k


def lattice_one_body(model: ClusterModel, k) -> np.ndarray:
    """Superlattice Bloch matrix ``A(k)`` for one spin, ``-mu`` on the diagonal."""
    k = _as_k(model, k)
    A = -model.mu * np.eye(model.L_c, dtype=complex)
    for i, j, s in model.bonds:
        dR = np.asarray(s) @ model.superlattice
        A[i, j] += -model.t * np.exp(1j * k @ dR)
    return A


def lattice_nambu(model: ClusterModel, k) -> np.ndarray:
    """``t(k) = [[A, 0], [0, -A]]``."""
    A = lattice_one_body(model, k)
    L = model.L_c
    out = np.zeros((2 * L, 2 * L), dtype=complex)
    out[:L, :L] = A
    out[L:, L:] = -A
    return out


def perturbation_matrix(model: ClusterModel, v: VariationalParams, k_tilde) -> np.ndarray:
    """CPT perturbation ``V(k) = t(k) - t'`` at a grid wavevector.

    Any point of the full reciprocal lattice is accepted; it is equivalent to
    its image folded into the reduced zone.
    """
    k = check_on_grid(model, k_tilde)
    return lattice_nambu(model, k) - cluster_one_body(model, v)


def k_grid(model: ClusterModel) -> np.ndarray:
    """Reduced-zone grid, shape ``(N_c**dim, dim)``."""
    step = 2 * np.pi / (model.n_lattice * model.a)
    axis = step * np.arange(model.N_c)
    mesh = np.meshgrid(*[axis] * model.dimension, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def lattice_k_grid(model: ClusterModel) -> np.ndarray:
    """Full reciprocal grid of the lattice, shape ``(n_lattice**dim, dim)``."""
    step = 2 * np.pi / (model.n_lattice * model.a)
    axis = step * np.arange(model.n_lattice)
    mesh = np.meshgrid(*[axis] * model.dimension, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def band_energy(model: ClusterModel, k) -> np.ndarray:
    """Nearest-neighbour band ``-2t sum_d cos(k_d a) - mu``."""
    k = np.atleast_2d(np.asarray(k, dtype=float))
    return -2 * model.t * np.cos(k * model.a).sum(axis=-1) - model.mu
