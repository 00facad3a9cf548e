import math

import numpy as np
import pytest

from cpblab.bose_hubbard import (
    Basis,
    CpbParams,
    HamiltonianMatrix,
    StateVector,
    annihilation_expectation,
    apply_annihilation,
    binomial_product_state,
    build_bose_hubbard,
    build_oscillator_hamiltonian,
    build_two_mode_restricted,
    coherent_vector,
    eigensolve,
    eigenvalues,
    evolve_state,
    number_moments,
    overlap,
    two_mode_dense,
    two_mode_offset,
)
from cpblab.errors import BasisMismatchError, ConvergenceError, ParameterError
from cpblab.utils import default_cutoff


def test_params_fill_derived_fields():
    p = CpbParams.from_josephson(1.0, 50.0, 2000, 1000.0)
    assert p.g == 4.0
    assert p.U == 4000.0
    assert p.K * math.sqrt(1000.0 * 1000.0) == pytest.approx(50.0, rel=1e-12)
    q = CpbParams.from_potential(1.0, p.K, 2000, p.U)
    assert q.n_bar == pytest.approx(1000.0, rel=1e-12)
    assert q.E_J == pytest.approx(50.0, rel=1e-12)


def test_params_reject_inconsistent_or_invalid():
    with pytest.raises(ParameterError):
        CpbParams(E_C=1.0, K=0.0, E_J=0.0, N=10, n_bar=2.0, g=3.0, U=8.0)
    problems = CpbParams.check(-1.0, -2.0, 1, 0.5)
    assert len(problems) == 3
    with pytest.raises(ParameterError):
        CpbParams.from_josephson(1.0, 1.0, 10, 10.0)


def test_two_mode_restricted_small_example():
    p = CpbParams.from_potential(1.0, 1.0, 2, 0.0)
    H = build_two_mode_restricted(p)
    assert H.dimension == 3
    assert H.corner == 0.0
    np.testing.assert_allclose(H.diagonal, [0.0, 1.0, 4.0])
    np.testing.assert_allclose(H.off_diagonal, [-math.sqrt(2.0), -math.sqrt(2.0)])


def test_two_mode_without_hopping_is_diagonal():
    p = CpbParams.from_potential(1.0, 0.0, 6, 10.0)
    H = build_two_mode_restricted(p)
    assert not np.any(H.off_diagonal)
    expected = np.sort((np.arange(7) - 2.5) ** 2)
    np.testing.assert_allclose(eigenvalues(H, 7), expected, atol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 7, 12])
def test_two_mode_matches_brute_force_fock_space(N):
    n_bar = N / 2.0 if N == 3 else N / 3.0
    p = CpbParams.from_potential(1.0, 0.5, N, 4.0 * n_bar)
    U1, U2 = 0.0, 4.0 * n_bar
    restricted = eigenvalues(build_two_mode_restricted(p, U1, U2), N + 1) + two_mode_offset(p, U1, U2)
    dense = np.linalg.eigvalsh(two_mode_dense(p, U1, U2))
    np.testing.assert_allclose(restricted, dense, rtol=0, atol=1e-10)


def test_literal_hopping_vanishes_at_the_edges():
    p = CpbParams.from_potential(1.0, 0.3, 8, 12.0)
    H = build_two_mode_restricted(p, literal=True)
    assert H.off_diagonal[0] == 0.0
    assert H.off_diagonal[-1] == 0.0
    k = 3
    assert H.off_diagonal[k] == pytest.approx(-0.3 * (k * (8 - k) * (k + 1) * (8 - k - 1)) ** 0.25)


def test_bose_hubbard_without_josephson_is_parabolic():
    p = CpbParams.from_josephson(1.0, 0.0, 10, 3.0)
    np.testing.assert_allclose(eigenvalues(build_bose_hubbard(p), 11), np.sort((np.arange(11) - 3.0) ** 2))


def test_bose_hubbard_periodic_matrix_against_dense():
    p = CpbParams.from_josephson(1.0, 1.0, 4, 2.0)
    H = build_bose_hubbard(p)
    assert H.corner == -1.0
    M = np.diag((np.arange(5) - 2.0) ** 2) - np.eye(5, k=1) - np.eye(5, k=-1)
    M[0, 4] = M[4, 0] = -1.0
    np.testing.assert_allclose(H.to_dense(), M)
    np.testing.assert_allclose(eigenvalues(H, 5), np.linalg.eigvalsh(M), atol=1e-10)
    back = HamiltonianMatrix.from_dense(H.to_dense(), H.basis)
    np.testing.assert_array_equal(back.diagonal, H.diagonal)
    np.testing.assert_array_equal(back.off_diagonal, H.off_diagonal)
    assert back.corner == H.corner


def test_bose_hubbard_reflection_symmetry():
    a = build_bose_hubbard(CpbParams.from_josephson(1.0, 2.0, 20, 7.3))
    b = build_bose_hubbard(CpbParams.from_josephson(1.0, 2.0, 20, 20 - 7.3))
    np.testing.assert_allclose(eigenvalues(a, 21), eigenvalues(b, 21), atol=1e-10)


def test_oscillator_gap_near_matched_plasma_frequency():
    p = CpbParams.from_josephson(1.0, 50.0, 1000, 100.0)
    e = eigenvalues(build_oscillator_hamiltonian(p, cutoff=400), 2)
    assert e[1] - e[0] == pytest.approx(math.sqrt(2.0 * 1.0 * 2.0 * 50.0), rel=0.05)


def test_oscillator_full_spectrum_against_dense():
    p = CpbParams.from_josephson(1.0, 2.0, 100, 4.0)
    H = build_oscillator_hamiltonian(p, cutoff=60)
    assert H.dimension == 61
    assert H.off_diagonal[0] == pytest.approx(-2.0 / 2.0)
    np.testing.assert_allclose(eigenvalues(H, 61), np.linalg.eigvalsh(H.to_dense()), rtol=0, atol=1e-9)


def test_oscillator_rejects_small_cutoff():
    p = CpbParams.from_josephson(1.0, 2.0, 1000, 100.0)
    with pytest.raises(ParameterError, match="cutoff"):
        build_oscillator_hamiltonian(p, cutoff=150)


def test_oscillator_eigenvectors_have_small_number_variance():
    p = CpbParams.from_josephson(1.0, 50.0, 20000, 1e4)
    _, vecs = eigensolve(build_oscillator_hamiltonian(p), 3)
    variances = [number_moments(v)[1] for v in vecs]
    assert variances[0] == pytest.approx(0.5 * math.sqrt(2.0 * 50.0 / 2.0), rel=0.1)
    assert max(variances) < 20.0
    coherent = coherent_vector(1e4, 0.0)
    assert number_moments(coherent)[1] == pytest.approx(1e4, rel=1e-6)


def test_windowed_fock_basis_keeps_low_levels():
    p = CpbParams.from_josephson(1.0, 50.0, 20000, 1e4)
    full = build_oscillator_hamiltonian(p)
    window = build_oscillator_hamiltonian(p, k_min=8500)
    assert window.dimension == full.dimension - 8500
    assert window.basis.labels[0] == 8500
    np.testing.assert_allclose(eigenvalues(window, 3), eigenvalues(full, 3), rtol=0, atol=1e-6)
    with pytest.raises(ParameterError, match="k_min"):
        build_oscillator_hamiltonian(p, k_min=9500)

    a = number_moments(coherent_vector(1e4, 0.3, k_min=8500))
    b = number_moments(coherent_vector(1e4, 0.3))
    assert a == pytest.approx(b, rel=1e-9)


def test_eigensolve_small_cases():
    w, vecs = eigensolve(HamiltonianMatrix([0.0, 0.0], [-1.0]), 2)
    np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-12)
    assert abs(overlap(vecs[0], vecs[1])) < 1e-12
    w, _ = eigensolve(HamiltonianMatrix(np.ones(5), np.zeros(4)), 5)
    np.testing.assert_allclose(w, np.ones(5))
    with pytest.raises(ParameterError):
        eigensolve(HamiltonianMatrix(np.ones(5), np.zeros(4)), 6)


@pytest.mark.parametrize("dim", [50, 800])
def test_eigensolve_random_tridiagonal_against_dense(rng, dim):
    H = HamiltonianMatrix(rng.normal(size=dim), rng.normal(size=dim - 1))
    w, vecs = eigensolve(H, 6)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(H.to_dense())[:6], atol=1e-10)
    for lam, v in zip(w, vecs):
        assert np.linalg.norm(H.matvec(v.amplitudes) - lam * v.amplitudes) < 1e-9 * H.norm()


def test_binomial_product_state_small():
    s = binomial_product_state(2, 1.0, 0.0)
    np.testing.assert_allclose(s.amplitudes, [0.5, math.sqrt(0.5), 0.5], atol=1e-15)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        binomial_product_state(10, 10.0, 0.0)


def test_binomial_approaches_coherent_vector():
    cutoff = default_cutoff(100.0)
    coh = coherent_vector(100.0, 0.3, cutoff=cutoff)
    prod = binomial_product_state(10_000, 100.0, 0.3).as_fock(cutoff)
    assert abs(overlap(prod, coh)) >= 0.999


@pytest.mark.parametrize("n1,sizes", [(10.0, [100, 1000, 10_000]), (100.0, [200, 1000, 10_000])])
def test_binomial_overlap_is_monotone_in_N(n1, sizes):
    cutoff = default_cutoff(n1)
    coh = coherent_vector(n1, 0.0, cutoff=cutoff)
    fidelities = [abs(overlap(binomial_product_state(N, n1, 0.0).as_fock(cutoff), coh)) for N in sizes]
    assert fidelities == sorted(fidelities)


def test_coherent_vector_moments_and_eigen_relation():
    v = coherent_vector(4.0, 0.0, cutoff=40)
    mean, var = number_moments(v)
    assert mean == pytest.approx(4.0, abs=1e-8)
    assert var == pytest.approx(4.0, abs=1e-6)

    w = coherent_vector(4.0, math.pi / 2, cutoff=40)
    b = annihilation_expectation(w)
    assert abs(b - (-2j)) < 1e-8
    alpha = 2.0 * complex(math.cos(math.pi / 2), -math.sin(math.pi / 2))
    assert np.linalg.norm(apply_annihilation(w).amplitudes - alpha * w.amplitudes) <= 1e-6


def test_coherent_vector_vacuum_limit():
    v = coherent_vector(1e-12, 0.0)
    assert abs(v.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)


def test_overlap_rules():
    v = coherent_vector(4.0, 0.2, cutoff=40)
    assert overlap(v, v) == pytest.approx(1.0, abs=1e-12)
    e0 = StateVector(np.eye(5)[0], Basis.fock(4))
    e1 = StateVector(np.eye(5)[1], Basis.fock(4))
    assert overlap(e0, e1) == 0
    with pytest.raises(BasisMismatchError):
        overlap(e0, StateVector(np.eye(5)[0], Basis.number(4)))


def test_evolve_state_is_unitary():
    p = CpbParams.from_josephson(1.0, 2.0, 100, 4.0)
    H = build_oscillator_hamiltonian(p, cutoff=60)
    psi = coherent_vector(4.0, 0.1, cutoff=60)
    states = evolve_state(H, psi, [0.0, 0.5, 3.0])
    np.testing.assert_allclose(states[0].amplitudes, psi.amplitudes, atol=1e-12)
    for s in states:
        assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_solver_failures_carry_the_lapack_count(monkeypatch):
    def tridiagonal_failure(*args, **kwargs):
        raise np.linalg.LinAlgError("stein did not converge (LAPACK info=3)")

    def dense_failure(*args, **kwargs):
        raise np.linalg.LinAlgError("2 eigenvectors failed to converge.")

    monkeypatch.setattr("scipy.linalg.eigh_tridiagonal", tridiagonal_failure)
    monkeypatch.setattr("scipy.linalg.eigh", dense_failure)
    big = HamiltonianMatrix(np.zeros(600), np.ones(599))
    with pytest.raises(ConvergenceError, match="LAPACK info=3") as exc:
        eigensolve(big, 2)
    assert exc.value.info == 3
    assert exc.value.to_dict()["info"] == 3

    with pytest.raises(ConvergenceError) as exc:
        eigensolve(HamiltonianMatrix(np.zeros(4), np.ones(3)), 2)
    assert exc.value.info == 2
