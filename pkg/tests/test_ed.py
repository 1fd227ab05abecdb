from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from hubbard_vca.ed import (AccuracyWarning, ResourceGuardError, diagonalize, lehmann_data, lehmann_green,
                            lehmann_green_at, matsubara_occupation)
from hubbard_vca.model import ClusterModel, VariationalParams, build_cluster_hamiltonian, lattice_k_grid
from hubbard_vca.operators import DomainError, PauliOperator


def subset_sums(modes):
    return sorted(sum(c) for r in range(len(modes) + 1) for c in combinations(modes, r))


def test_tight_binding_energies_are_mode_subset_sums(tb_model):
    sol = diagonalize(build_cluster_hamiltonian(tb_model, VariationalParams()), 1.0)
    assert np.allclose(np.sort(sol.energies), subset_sums([-1, -1, 1, 1]))


def test_single_site_interaction_spectrum():
    sol = diagonalize(build_cluster_hamiltonian(ClusterModel(L_c=1, U=2.0), VariationalParams()), 1.0)
    assert np.allclose(np.sort(sol.energies), [-2, 0, 0, 0])


@pytest.mark.parametrize("L_c", [1, 2, 3])
def test_partition_function_infinite_temperature(L_c):
    model = ClusterModel(L_c=L_c, U=1.5)
    sol = diagonalize(build_cluster_hamiltonian(model, VariationalParams(mu_prime=0.3)), 0.0)
    assert sol.Z == pytest.approx(4 ** L_c)


def test_grand_potential_matches_direct_sum():
    sol = diagonalize(build_cluster_hamiltonian(ClusterModel(L_c=1, U=2.0), VariationalParams()), 0.5)
    assert sol.grand_potential == pytest.approx(-2.0 * np.log(3 + np.exp(1.0)))


def test_guards():
    with pytest.raises(ResourceGuardError):
        diagonalize(PauliOperator.identity(15), 1.0)
    with pytest.raises(DomainError):
        diagonalize(PauliOperator.identity(2), -1.0)
    with pytest.raises(DomainError):
        diagonalize(PauliOperator(1, {"X": 1j}), 1.0)


def test_local_green_of_two_site_chain(tb_model):
    sol = diagonalize(build_cluster_hamiltonian(tb_model, VariationalParams()), tb_model.beta)
    w = np.linspace(-3, 3, 61)
    eta = 0.1
    g = lehmann_green(sol, w, eta, 2)
    z = w + 1j * eta
    expect = 0.5 * (1 / (z - 1) + 1 / (z + 1))
    assert np.allclose(g.normal[:, 0, 0], expect)
    assert np.allclose(g.matrices[:, 2, 2], expect)   # hole block of a half-filled chain


def test_anomalous_blocks_vanish_without_pairing():
    model = ClusterModel(L_c=2, U=4.0, mu=-2.0, T=0.1)
    sol = diagonalize(build_cluster_hamiltonian(model, VariationalParams(mu_prime=-2.0)), model.beta)
    g = lehmann_green(sol, np.linspace(-5, 5, 41), 0.1, 2)
    assert np.allclose(g.anomalous, 0, atol=1e-14)


def test_anomalous_blocks_appear_with_pairing():
    model = ClusterModel(L_c=2, U=4.0)
    sol = diagonalize(build_cluster_hamiltonian(model, VariationalParams(delta_prime=0.3)), model.beta)
    g = lehmann_green(sol, np.linspace(-5, 5, 41), 0.1, 2)
    assert np.max(np.abs(g.anomalous)) > 1e-3


def test_spectral_weight_sums_to_one():
    model = ClusterModel(L_c=2, U=4.0, T=0.3)
    sol = diagonalize(build_cluster_hamiltonian(model, VariationalParams(mu_prime=0.2, delta_prime=0.1)),
                      model.beta)
    data = lehmann_data(sol, 2)
    weight = np.einsum("ar,r,ar->a", data.Q, data.P_mn, data.Q.conj()).real
    assert np.allclose(weight, 1.0, atol=1e-12)
    # the same from the broadened function on a wide grid
    w = np.linspace(-400, 400, 400_001)
    g = lehmann_green(sol, w, 0.05, 2)
    integral = g.spectral_diagonal().sum(axis=0) * (w[1] - w[0])
    assert np.allclose(integral, 1.0, atol=2e-3)


def test_reflection_symmetry_of_retarded_function():
    model = ClusterModel(L_c=2, U=2.0, T=0.5)
    sol = diagonalize(build_cluster_hamiltonian(model, VariationalParams(delta_prime=0.2)), model.beta)
    data = lehmann_data(sol, 2)
    z = np.linspace(-3, 3, 13) + 0.2j
    upper = lehmann_green_at(data, z)
    lower = lehmann_green_at(data, z.conj())
    assert np.allclose(lower, np.conj(np.swapaxes(upper, 1, 2)))


def test_negative_broadening_rejected(tb_model):
    sol = diagonalize(build_cluster_hamiltonian(tb_model, VariationalParams()), 1.0)
    with pytest.raises(DomainError):
        lehmann_green(sol, np.linspace(-1, 1, 5), 0.0, 2)


def _occupation(model, v):
    sol = diagonalize(build_cluster_hamiltonian(model, v), model.beta)
    return matsubara_occupation(model, v, sol)


def test_matsubara_low_temperature_fermi_sea():
    model = ClusterModel(L_c=2, N_c=50, T=0.01)
    N = _occupation(model, VariationalParams())
    k = lattice_k_grid(model).ravel()
    k = np.angle(np.exp(1j * k))                 # fold into (-pi, pi]
    inside = np.abs(k) < np.pi / 2 - 0.1
    outside = np.abs(k) > np.pi / 2 + 0.1
    assert np.all(N[inside] > 0.99) and np.all(N[outside] < 0.01)


def test_matsubara_particle_hole_symmetry():
    model = ClusterModel(L_c=2, N_c=50, T=0.5)
    N = _occupation(model, VariationalParams())
    k = lattice_k_grid(model).ravel()
    # N(k) + N(pi - k) = 1 at half filling of the nearest-neighbour band
    n = model.n_lattice
    index = np.rint(k * n / (2 * np.pi)).astype(int) % n
    where = {int(q): i for i, q in enumerate(index)}
    for i, q in enumerate(index):
        j = where[(n // 2 - q) % n]
        assert N[i] + N[j] == pytest.approx(1.0, abs=1e-6)


def test_matsubara_free_fermions_match_fermi_function():
    model = ClusterModel(L_c=2, N_c=20, T=0.4, mu=-0.7)
    N = _occupation(model, VariationalParams(mu_prime=-0.7))
    band = -2 * np.cos(lattice_k_grid(model).ravel()) + 0.7
    assert np.allclose(N, 1 / (1 + np.exp(band / model.T)), atol=1e-5)


def test_matsubara_short_sum_warns():
    model = ClusterModel(L_c=2, N_c=4, T=0.2, U=4.0, mu=-2.0)
    v = VariationalParams(mu_prime=-2.0)
    sol = diagonalize(build_cluster_hamiltonian(model, v), model.beta)
    with pytest.warns(AccuracyWarning):
        matsubara_occupation(model, v, sol, n_freq=2, tol=1e-12)
