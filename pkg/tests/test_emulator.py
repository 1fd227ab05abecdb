import numpy as np
import pytest
from scipy.linalg import expm

from hubbard_vca.ed import diagonalize, hermitian_observables, lehmann_correlation
from hubbard_vca.emulator import (DensityMatrix, Evolution, GibbsPrepConfig, alpha_closed_form, commuting_groups,
                                  exact_gibbs, exact_unitary, hadamard_test_circuit, measure_all_correlations,
                                  measure_correlation, phase_register_amplitudes, prepare_gibbs_riera,
                                  simulated_beta, trotter_unitary)
from hubbard_vca.model import (ClusterModel, ConfigurationError, VariationalParams, build_cluster_hamiltonian,
                               cluster_hamiltonian_parts)
from hubbard_vca.operators import DomainError, PauliOperator


def cluster(L_c=2, U=0.0, T=1.0, **fields):
    model = ClusterModel(L_c=L_c, U=U, T=T)
    v = VariationalParams(**fields)
    return model, build_cluster_hamiltonian(model, v)


def test_gibbs_infinite_temperature_is_fully_mixed():
    _, H = cluster(U=2.0, mu_prime=0.3)
    assert np.allclose(exact_gibbs(H, 0.0).matrix, np.eye(16) / 16)


def test_gibbs_low_temperature_is_ground_projector():
    _, H = cluster(U=2.0, mu_prime=0.3, delta_prime=0.1)
    rho = exact_gibbs(H, 1e3).matrix
    w, v = np.linalg.eigh(H.to_matrix())
    assert w[1] - w[0] > 1e-3
    ground = np.outer(v[:, 0], v[:, 0].conj())
    assert np.allclose(rho, ground, atol=1e-8)


def test_gibbs_single_site_weight():
    _, H = cluster(L_c=1, U=2.0)
    rho = exact_gibbs(H, 1.0)
    assert np.max(np.linalg.eigvalsh(rho.matrix)) == pytest.approx(np.e ** 2 / (3 + np.e ** 2))
    assert np.trace(rho.matrix) == pytest.approx(1.0)
    Hm = H.to_matrix()
    assert np.allclose(Hm @ rho.matrix, rho.matrix @ Hm, atol=1e-10)


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([1.0, 1.0]))
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([1.5, -0.5]))


def test_equal_time_same_observable_gives_certain_outcome():
    _, H = cluster(U=1.0)
    rho = exact_gibbs(H, 1.0)
    X = hermitian_observables(2)[0]
    tr = measure_correlation(rho, H, X, X, [0.0])
    assert tr.p0[0] == pytest.approx(1.0) and tr.correlation[0] == pytest.approx(2.0)


def test_single_level_oscillates_at_field_frequency():
    mu_prime = 0.7
    H = PauliOperator.from_symbols("n", -mu_prime)
    rho = exact_gibbs(H, 2.0)
    X = PauliOperator.from_symbols("X")
    tau = np.linspace(0, 40, 4001)
    C = measure_correlation(rho, H, X, X, tau).correlation
    assert np.allclose(C, 2 * np.cos(mu_prime * tau))
    power = np.abs(np.fft.rfft(C - C.mean()))
    freq = 2 * np.pi * np.fft.rfftfreq(len(tau), tau[1] - tau[0])
    assert freq[np.argmax(power)] == pytest.approx(mu_prime, abs=2 * np.pi / 40)


def test_circuit_probabilities_match_gate_level_emulation():
    _, H = cluster(U=2.0, T=0.5, mu_prime=0.2, delta_prime=0.15)
    rho = exact_gibbs(H, 2.0)
    ops = hermitian_observables(2)
    for tau in (0.0, 0.37, 1.9):
        U = expm(-1j * tau * H.to_matrix())
        for a, b in [(0, 0), (1, 4), (6, 3)]:
            p = measure_correlation(rho, H, ops[a], ops[b], [tau]).p0[0]
            assert p == pytest.approx(hadamard_test_circuit(rho, U, ops[a], ops[b]), abs=1e-12)


def test_recovered_correlation_matches_lehmann_sum():
    _, H = cluster(U=4.0, T=0.1, mu_prime=-2.0)
    sol = diagonalize(H, 10.0)
    rho = exact_gibbs(H, 10.0)
    ops = hermitian_observables(2)
    tau = np.linspace(0, 10, 41)
    for a in range(len(ops)):
        for b in range(len(ops)):
            C = measure_correlation(rho, H, ops[a], ops[b], tau).correlation
            assert np.allclose(C, lehmann_correlation(sol, ops[a], ops[b], tau).real, atol=1e-10)


def test_probabilities_complementary_and_correlation_real():
    _, H = cluster(U=1.0, delta_prime=0.3)
    rec = measure_all_correlations(exact_gibbs(H, 1.0), H, 2, np.linspace(0, 3, 7))
    assert np.isrealobj(rec.values)
    tr = measure_correlation(exact_gibbs(H, 1.0), H, hermitian_observables(2)[1],
                             hermitian_observables(2)[2], np.linspace(0, 3, 7))
    assert np.allclose(tr.p0 + tr.p1, 1.0)


def test_measurement_is_linear_in_input_state():
    _, H = cluster(U=1.0)
    a, b = exact_gibbs(H, 0.3), exact_gibbs(H, 3.0)
    ops = hermitian_observables(2)
    tau = np.linspace(0, 2, 5)
    mixed = measure_correlation(a.mix(b, 0.25), H, ops[0], ops[2], tau).p0
    parts = 0.25 * measure_correlation(a, H, ops[0], ops[2], tau).p0 \
        + 0.75 * measure_correlation(b, H, ops[0], ops[2], tau).p0
    assert np.allclose(mixed, parts)


def test_non_hermitian_observable_rejected():
    _, H = cluster()
    rho = exact_gibbs(H, 1.0)
    bad = PauliOperator(4, {"IIIX": 1j})
    with pytest.raises(DomainError):
        measure_correlation(rho, H, bad, bad, [0.0])


def test_shot_noise_is_seeded():
    _, H = cluster(U=1.0)
    rho = exact_gibbs(H, 1.0)
    X = hermitian_observables(2)[0]
    tau = np.linspace(0, 2, 9)
    a = measure_correlation(rho, H, X, X, tau, shots=500, seed=7)
    b = measure_correlation(rho, H, X, X, tau, shots=500, seed=7)
    c = measure_correlation(rho, H, X, X, tau, shots=500, seed=8)
    assert np.array_equal(a.p0, b.p0) and not np.array_equal(a.p0, c.p0)
    exact = measure_correlation(rho, H, X, X, tau).p0
    assert np.all(np.abs(a.p0 - exact) < 5 * np.sqrt(0.25 / 500) + 1e-12)


def test_trotter_identity_at_zero_time():
    _, H = cluster(U=2.0, mu_prime=0.3)
    assert np.allclose(trotter_unitary(H, 0.0, 3), np.eye(16))


def test_trotter_exact_for_commuting_terms():
    H = PauliOperator(3, {"ZZI": 0.7, "IZZ": -0.4, "ZIZ": 1.1})
    assert len(commuting_groups(H)) == 1
    assert np.allclose(trotter_unitary(H, 0.9, 1), exact_unitary(H, 0.9))


def test_trotter_unitary_and_error_shrinks():
    model, H = cluster(U=2.0, mu_prime=0.2, delta_prime=0.1)
    parts = [p for p in cluster_hamiltonian_parts(model, VariationalParams(mu_prime=0.2, delta_prime=0.1)).values()
             if not p.is_zero()]
    exact = exact_unitary(H, 0.8)
    errors = []
    for n in (1, 2, 4, 8):
        U = trotter_unitary(H, 0.8, n, parts)
        assert np.allclose(U.conj().T @ U, np.eye(16), atol=1e-10)
        errors.append(np.linalg.norm(U - exact, 2))
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_trotter_evolution_correlation_error_shrinks():
    model, H = cluster(U=2.0, mu_prime=0.2, delta_prime=0.1)
    parts = tuple(p for p in cluster_hamiltonian_parts(model, VariationalParams(mu_prime=0.2, delta_prime=0.1))
                  .values() if not p.is_zero())
    rho = exact_gibbs(H, 1.0)
    ops = hermitian_observables(2)
    tau = [1.0]
    exact = measure_correlation(rho, H, ops[0], ops[5], tau).correlation
    errs = [abs(measure_correlation(rho, H, ops[0], ops[5], tau, Evolution("trotter", n, parts))
                .correlation - exact)[0] for n in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_evolution_rejects_bad_settings():
    with pytest.raises(DomainError):
        Evolution("leapfrog")
    with pytest.raises(DomainError):
        Evolution("trotter", 0)


# --------------------------------------------------------------------------- Gibbs preparation

def test_phase_register_fft_matches_closed_form():
    r = 6
    s = np.arange(2 ** r)
    for phi in (0.0, 0.123, 0.5, 0.987):
        assert np.allclose(phase_register_amplitudes(np.array([phi]), r)[0], alpha_closed_form(phi, s, r))


def test_phase_register_is_normalized():
    amps = phase_register_amplitudes(np.linspace(0, 1, 7), 5)
    assert np.allclose(np.sum(np.abs(amps) ** 2, axis=1), 1.0)


def test_midpoint_readout_is_infinite_temperature():
    q = 4
    beta = simulated_beta(2 ** (q - 1), q, eta=0.5, system_norm=1e-6, bath_norm=10.0)
    assert abs(beta) < 1e-5


def test_bath_splitting_scales_inverse_root_m():
    H = PauliOperator.from_symbols("n")
    etas = []
    for m in (4, 16, 64):
        res = prepare_gibbs_riera(H, GibbsPrepConfig(m=m, r=10, q=4, target_beta=0.0), rng_seed=0)
        etas.append(res.eta)
    assert etas[0] / etas[1] == pytest.approx(2.0)
    assert etas[1] / etas[2] == pytest.approx(2.0)


def test_unreachable_target_rejected():
    H = PauliOperator.from_symbols("n")
    with pytest.raises(ConfigurationError):
        prepare_gibbs_riera(H, GibbsPrepConfig(m=4, r=8, q=4, target_beta=50.0), rng_seed=0)
    with pytest.raises(ConfigurationError):
        GibbsPrepConfig(r=4, q=4)


def test_preparation_is_seeded_and_valid():
    H = PauliOperator.from_symbols("n")
    cfg = GibbsPrepConfig()
    a = prepare_gibbs_riera(H, cfg, rng_seed=5)
    b = prepare_gibbs_riera(H, cfg, rng_seed=5)
    assert a.runs_used == b.runs_used and np.array_equal(a.rho.matrix, b.rho.matrix)
    assert np.trace(a.rho.matrix) == pytest.approx(1.0)
    assert abs(a.beta_implied - cfg.target_beta) <= a.delta_beta


def test_trace_distance_decreases_with_bath_size():
    """Fixed lam, growing m: the prepared state should approach the Gibbs state."""
    H = PauliOperator.from_symbols("n")
    distances = [prepare_gibbs_riera(H, GibbsPrepConfig(m=m, r=8, q=4, lam=1.0), rng_seed=11).trace_distance
                 for m in (4, 8, 16)]
    assert distances[0] > distances[1] > distances[2], distances
