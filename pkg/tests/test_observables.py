import numpy as np
import pytest

from hubbard_vca.greens import TimeGrid
from hubbard_vca.model import ClusterModel, VariationalParams, band_energy, lattice_k_grid
from hubbard_vca.observables import (bisect_filling, cpt_green, periodize, scalar_observables,
                                     spectra_and_distributions, xi_real_space, _xi_reciprocal)
from hubbard_vca.vca import LehmannBackend

FAST = LehmannBackend(TimeGrid(dtau=0.05, n_max=1000).frequency_grid())


def lattice(model, v, backend=FAST):
    lat = cpt_green(backend.solve(model, v).green, model, v)
    return lat, spectra_and_distributions(lat)


def test_without_perturbation_lattice_function_is_periodized_cluster():
    model = ClusterModel(L_c=2, N_c=8, t=0.0, U=2.0, mu=0.3, T=0.5)
    v = VariationalParams(mu_prime=0.3)
    green = FAST.solve(model, v).green
    lat = cpt_green(green, model, v)
    for i, k in enumerate(lat.k):
        assert np.allclose(lat.normal[i], periodize(model, k, green.normal))


def test_free_lattice_peaks_follow_band():
    model = ClusterModel(L_c=2, N_c=25, T=1.0)
    lat, sp = lattice(model, VariationalParams())
    band = band_energy(model, lat.k)
    peaks = lat.omega[np.argmax(sp.A, axis=1)]
    assert np.max(np.abs(peaks - band)) <= lat.d_omega + lat.eta
    assert sp.A.min() >= -1e-8
    assert np.allclose(sp.A.sum(axis=1) * lat.d_omega, 1.0, atol=0.02)
    assert not lat.flagged


def test_no_pairing_field_means_no_pair_amplitude():
    model = ClusterModel(L_c=2, N_c=10, U=2.0, T=0.5)
    lat, sp = lattice(model, VariationalParams())
    assert np.allclose(sp.F, 0, atol=1e-12)
    out = scalar_observables(lat, sp)
    assert out["Delta"] == pytest.approx(0.0, abs=1e-12)
    assert out["xi"] is None


def test_free_lattice_has_no_pair_amplitude_even_with_field():
    model = ClusterModel(L_c=2, N_c=10, T=0.5)
    lat, sp = lattice(model, VariationalParams(delta_prime=0.3))
    assert np.allclose(sp.F, 0, atol=1e-10)


def test_half_filling_at_particle_hole_point():
    # the on-site term is -U n_up n_down, symmetric about mu = -U/2
    model = ClusterModel(L_c=2, N_c=20, U=2.0, mu=-1.0, T=0.5)
    lat, sp = lattice(model, VariationalParams(mu_prime=-1.0))
    out = scalar_observables(lat, sp)
    assert out["n"] == pytest.approx(0.5, abs=0.01)
    # finite broadening leaks Lorentzian tails across the truncated window
    assert out["n_up"] == pytest.approx(out["n_down"], abs=0.01)


def test_quarter_filling_chemical_potential():
    model = ClusterModel(L_c=2, N_c=50, T=0.05)
    mu, n = bisect_filling(model, FAST, 0.25)
    assert n == pytest.approx(0.25, abs=1e-3)
    assert mu == pytest.approx(-np.sqrt(2), abs=0.05)


def test_coherence_length_routes_agree_for_bcs_pairs():
    model = ClusterModel(L_c=2, N_c=200)
    k = lattice_k_grid(model).ravel()
    eps = -2 * np.cos(k)
    gap = 0.5
    F_k = gap / (2 * np.sqrt(eps ** 2 + gap ** 2))
    a, b = _xi_reciprocal(model, F_k), xi_real_space(model, F_k)
    assert a == pytest.approx(b, rel=0.05)


def test_interacting_distribution_not_peaked_at_zone_centre():
    model = ClusterModel(L_c=2, N_c=50, U=4.0, mu=-2.0, T=0.1)
    lat, sp = lattice(model, VariationalParams(mu_prime=-2.0), LehmannBackend())
    k = np.angle(np.exp(1j * lat.k.ravel()))
    assert abs(k[np.argmax(sp.N_k)]) > 1e-9
